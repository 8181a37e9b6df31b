import { existsSync, mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import {
  FIGURE_KINDS,
  FigureSpec,
  buildOption,
  growthRateSeries,
  loadSpec,
  render,
} from "../src/figures.js";
import { FigureError, column, readTable } from "../src/tables.js";

const ROOT = join(__dirname, "..");
const SPECS = join(ROOT, "specs");

const SHIPPED: Record<string, string> = {
  interface_snapshots: "interface.json",
  amplitude_profiles: "profiles.json",
  spectrum_decay: "spectrum.json",
  growth_rates: "rates.json",
  refinement_norms: "refinement.json",
};

function tmpOut(name: string): string {
  return join(mkdtempSync(join(tmpdir(), "fig-")), name);
}

describe("rendering every shipped figure kind", () => {
  for (const kind of FIGURE_KINDS) {
    it(`renders ${kind} from the sample run`, () => {
      const spec = loadSpec(join(SPECS, SHIPPED[kind]));
      const out = render({ ...spec, output: tmpOut(`${kind}.svg`) });
      expect(existsSync(out)).toBe(true);
      const svg = readFileSync(out, "utf-8");
      expect(svg.startsWith("<svg")).toBe(true);
      expect(svg.length).toBeGreaterThan(2000);
      expect(svg).toContain("path"); // drawn series, not an empty canvas
    });
  }

  it("is deterministic: identical inputs give identical bytes", () => {
    const spec = loadSpec(join(SPECS, "rates.json"));
    const a = readFileSync(render({ ...spec, output: tmpOut("a.svg") }), "utf-8");
    const b = readFileSync(render({ ...spec, output: tmpOut("b.svg") }), "utf-8");
    expect(a).toBe(b);
  });
});

describe("growth-rate reference line", () => {
  it("matches the table values used by the rate validation (k/2, 1.0 at k = 2)", () => {
    const spec = loadSpec(join(SPECS, "rates.json"));
    const table = readTable(spec.inputs.rates);
    const { measured, reference } = growthRateSeries(table);
    const ks = column(table, "k");
    const refs = column(table, "reference_rate");
    expect(reference).toEqual(ks.map((k, i) => [k, refs[i]]));
    for (const [k, r] of reference) {
      expect(r).toBe(k / 2);
    }
    const atTwo = reference.find(([k]) => k === 2);
    expect(atTwo?.[1]).toBe(1.0);
    const measuredAtTwo = measured.find(([k]) => k === 2);
    expect(Math.abs((measuredAtTwo?.[1] ?? 0) - 1.0)).toBeLessThan(0.01);
  });

  it("the rendered option carries the reference as its own series", () => {
    const spec = loadSpec(join(SPECS, "rates.json"));
    const option = buildOption(spec) as { series: { name: string; data: unknown[] }[] };
    const ref = option.series.find((s) => s.name === "k/2 reference");
    expect(ref).toBeDefined();
    expect(ref!.data).toContainEqual([2, 1]);
  });
});

describe("validation failures write nothing", () => {
  function emptyTableSpec(): FigureSpec {
    const dir = mkdtempSync(join(tmpdir(), "fig-"));
    const csv = join(dir, "rates.csv");
    writeFileSync(csv, "k,rate,reference_rate,rel_err\n");
    writeFileSync(
      join(dir, "rates.meta.json"),
      JSON.stringify({
        columns: { k: "", rate: "", reference_rate: "", rel_err: "" },
      }),
    );
    return {
      kind: "growth_rates",
      inputs: { rates: csv },
      output: join(dir, "out.svg"),
    };
  }

  it("empty table: error, no file written", () => {
    const spec = emptyTableSpec();
    expect(() => render(spec)).toThrow(/empty/);
    expect(existsSync(spec.output)).toBe(false);
  });

  it("missing column: error names the column", () => {
    const dir = mkdtempSync(join(tmpdir(), "fig-"));
    const csv = join(dir, "rates.csv");
    writeFileSync(csv, "k,rate\n1,0.5\n");
    writeFileSync(
      join(dir, "rates.meta.json"),
      JSON.stringify({ columns: { k: "", rate: "" } }),
    );
    const spec: FigureSpec = {
      kind: "growth_rates",
      inputs: { rates: csv },
      output: join(dir, "out.svg"),
    };
    expect(() => render(spec)).toThrow(/reference_rate/);
    expect(existsSync(spec.output)).toBe(false);
  });

  it("missing input mapping: error names the input", () => {
    expect(() =>
      render({ kind: "growth_rates", inputs: {}, output: "/tmp/x.svg" }),
    ).toThrow(/needs input 'rates'/);
  });

  it("unknown figure kind rejected at spec load", () => {
    const dir = mkdtempSync(join(tmpdir(), "fig-"));
    const p = join(dir, "bad.json");
    writeFileSync(p, JSON.stringify({ kind: "pie", inputs: {}, output: "x.svg" }));
    expect(() => loadSpec(p)).toThrow(FigureError);
  });

  it("unknown requested time rejected", () => {
    const spec = loadSpec(join(SPECS, "profiles.json"));
    expect(() =>
      buildOption({ ...spec, options: { times: [123.456] } }),
    ).toThrow(/not among stored snapshots/);
  });
});
