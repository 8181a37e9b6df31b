/**
 * Readers for the run-directory table format: CSV with a header row plus a
 * .meta.json sidecar documenting every column.  Columns are validated
 * against both the header and the sidecar before use.
 */

import { existsSync, readFileSync } from "node:fs";

export class FigureError extends Error {}

export interface TableMeta {
  columns: Record<string, string>;
  float_format?: string;
  coefficient_convention?: string;
}

export interface Table {
  path: string;
  columns: string[];
  rows: (number | string)[][];
  meta: TableMeta;
}

function parseCell(cell: string): number | string {
  if (cell === "inf") return Infinity;
  if (cell === "-inf") return -Infinity;
  if (cell === "nan") return NaN;
  if (cell === "") return "";
  const num = Number(cell);
  return Number.isNaN(num) && cell !== "nan" ? cell : num;
}

export function metaPath(tablePath: string): string {
  return tablePath.replace(/\.csv$/, ".meta.json");
}

export function readTable(path: string): Table {
  if (!existsSync(path)) {
    throw new FigureError(`table not found: ${path}`);
  }
  const sidecar = metaPath(path);
  if (!existsSync(sidecar)) {
    throw new FigureError(`table metadata not found: ${sidecar}`);
  }
  const meta = JSON.parse(readFileSync(sidecar, "utf-8")) as TableMeta;
  const text = readFileSync(path, "utf-8").trim();
  const lines = text.length ? text.split(/\r?\n/) : [];
  if (lines.length === 0) {
    throw new FigureError(`table has no header: ${path}`);
  }
  const columns = lines[0].split(",");
  const rows = lines.slice(1).map((line) => line.split(",").map(parseCell));
  for (const name of columns) {
    if (!(name in meta.columns)) {
      throw new FigureError(
        `column '${name}' of ${path} is missing from its metadata sidecar`,
      );
    }
  }
  return { path, columns, rows, meta };
}

export function requireNonEmpty(table: Table): void {
  if (table.rows.length === 0) {
    throw new FigureError(`table is empty: ${table.path}`);
  }
}

/** Column by name, validated against header and sidecar metadata. */
export function column(table: Table, name: string): number[] {
  const idx = table.columns.indexOf(name);
  if (idx < 0 || !(name in table.meta.columns)) {
    throw new FigureError(
      `column '${name}' not present in ${table.path} (have: ${table.columns.join(", ")})`,
    );
  }
  return table.rows.map((row) => {
    const v = row[idx];
    if (typeof v !== "number") {
      throw new FigureError(`column '${name}' of ${table.path} is not numeric`);
    }
    return v;
  });
}

/** Distinct values in file order. */
export function uniqueValues(values: number[]): number[] {
  const seen = new Set<number>();
  const out: number[] = [];
  for (const v of values) {
    if (!seen.has(v)) {
      seen.add(v);
      out.push(v);
    }
  }
  return out;
}

/** Up to limit entries evenly spread across the list, endpoints included. */
export function spread<T>(values: T[], limit: number): T[] {
  if (values.length <= limit) return values;
  const out: T[] = [];
  for (let i = 0; i < limit; i++) {
    out.push(values[Math.round((i * (values.length - 1)) / (limit - 1))]);
  }
  return [...new Set(out)];
}
