/**
 * Render figures from spec files: `node dist/cli.js spec.json [...]`.
 * Exits 1 with a message on validation or rendering errors.
 */

import { loadSpec, render } from "./figures.js";
import { FigureError } from "./tables.js";

export function main(argv: string[]): number {
  if (argv.length === 0) {
    console.error("usage: cli.js <figure-spec.json> [...]");
    return 1;
  }
  for (const path of argv) {
    try {
      const out = render(loadSpec(path));
      console.log(`${path} -> ${out}`);
    } catch (err) {
      if (err instanceof FigureError) {
        console.error(`error: ${err.message}`);
        return 1;
      }
      throw err;
    }
  }
  return 0;
}

process.exitCode = main(process.argv.slice(2));
