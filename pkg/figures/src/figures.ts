/**
 * Figure builders: each kind maps run tables onto a chart option object,
 * rendered headlessly to SVG.  Rendering is read-only with respect to run
 * outputs and deterministic for fixed inputs (no animation, fixed palette).
 */

import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { dirname, resolve } from "node:path";

import * as echarts from "echarts";

import {
  FigureError,
  Table,
  column,
  readTable,
  requireNonEmpty,
  spread,
  uniqueValues,
} from "./tables.js";

export const FIGURE_KINDS = [
  "interface_snapshots",
  "amplitude_profiles",
  "spectrum_decay",
  "growth_rates",
  "refinement_norms",
] as const;

export type FigureKind = (typeof FIGURE_KINDS)[number];

export interface FigureSpec {
  kind: FigureKind;
  inputs: Record<string, string>;
  options?: Record<string, unknown>;
  output: string;
  width?: number;
  height?: number;
}

const PALETTE = ["#24506e", "#c2542e", "#3e7d4f", "#8a5f9e", "#a08325", "#58707a"];

const BASE = {
  animation: false,
  color: PALETTE,
  backgroundColor: "#ffffff",
};

/** Load a figure spec; relative paths resolve against the spec file. */
export function loadSpec(path: string): FigureSpec {
  let raw: unknown;
  try {
    raw = JSON.parse(readFileSync(path, "utf-8"));
  } catch (err) {
    throw new FigureError(`spec ${path} is not readable JSON: ${err}`);
  }
  const spec = raw as Partial<FigureSpec>;
  if (!spec.kind || !(FIGURE_KINDS as readonly string[]).includes(spec.kind)) {
    throw new FigureError(
      `spec ${path}: kind must be one of ${FIGURE_KINDS.join(", ")}`,
    );
  }
  if (!spec.inputs || typeof spec.inputs !== "object") {
    throw new FigureError(`spec ${path}: inputs mapping is required`);
  }
  if (!spec.output || typeof spec.output !== "string") {
    throw new FigureError(`spec ${path}: output path is required`);
  }
  const base = dirname(resolve(path));
  const inputs: Record<string, string> = {};
  for (const [name, p] of Object.entries(spec.inputs)) {
    inputs[name] = resolve(base, p as string);
  }
  return {
    kind: spec.kind as FigureKind,
    inputs,
    options: spec.options ?? {},
    output: resolve(base, spec.output),
    width: spec.width ?? 760,
    height: spec.height ?? 480,
  };
}

function requiredInput(spec: FigureSpec, name: string): Table {
  const path = spec.inputs[name];
  if (!path) {
    throw new FigureError(`figure kind ${spec.kind} needs input '${name}'`);
  }
  const table = readTable(path);
  requireNonEmpty(table);
  return table;
}

function seriesTimes(spec: FigureSpec, times: number[]): number[] {
  const wanted = (spec.options?.times as number[] | undefined) ?? null;
  if (wanted) {
    return wanted.map((t) => {
      const match = times.find((u) => Math.abs(u - t) <= 1e-9 + 1e-9 * Math.abs(t));
      if (match === undefined) {
        throw new FigureError(`requested time ${t} not among stored snapshots`);
      }
      return match;
    });
  }
  const limit = (spec.options?.max_series as number | undefined) ?? 4;
  return spread(times, limit);
}

function groupByTime(
  table: Table,
  xName: string,
  yName: string,
  chosen: number[],
): { name: string; data: [number, number][] }[] {
  const t = column(table, "t");
  const x = column(table, xName);
  const y = column(table, yName);
  return chosen.map((time) => {
    const data: [number, number][] = [];
    for (let i = 0; i < t.length; i++) {
      if (t[i] === time) data.push([x[i], y[i]]);
    }
    return { name: `t = ${time.toPrecision(4)}`, data };
  });
}

// --- builders --------------------------------------------------------------

function interfaceSnapshots(spec: FigureSpec): echarts.EChartsCoreOption {
  const table = requiredInput(spec, "snapshots");
  const chosen = seriesTimes(spec, uniqueValues(column(table, "t")));
  const series = groupByTime(table, "z1", "z2", chosen);
  return {
    ...BASE,
    title: { text: (spec.options?.title as string) ?? "Interface positions" },
    legend: { data: series.map((s) => s.name), top: 28 },
    grid: { top: 64 },
    xAxis: { type: "value", name: "z1" },
    yAxis: { type: "value", name: "z2" },
    series: series.map((s) => ({
      type: "line",
      name: s.name,
      data: s.data,
      showSymbol: false,
    })),
  };
}

function amplitudeProfiles(spec: FigureSpec): echarts.EChartsCoreOption {
  const table = requiredInput(spec, "snapshots");
  const chosen = seriesTimes(spec, uniqueValues(column(table, "t")));
  const series = groupByTime(table, "sigma", "w", chosen);
  return {
    ...BASE,
    title: { text: (spec.options?.title as string) ?? "Amplitude profiles" },
    legend: { data: series.map((s) => s.name), top: 28 },
    grid: { top: 64 },
    xAxis: { type: "value", name: "sigma", min: 0, max: 2 * Math.PI },
    yAxis: { type: "value", name: "w" },
    series: series.map((s) => ({
      type: "line",
      name: s.name,
      data: s.data,
      showSymbol: false,
    })),
  };
}

function nearestStrip(diag: Table, time: number): number {
  const t = column(diag, "t");
  const strip = column(diag, "strip_w");
  let best = 0;
  for (let i = 1; i < t.length; i++) {
    if (Math.abs(t[i] - time) < Math.abs(t[best] - time)) best = i;
  }
  return strip[best];
}

function spectrumDecay(spec: FigureSpec): echarts.EChartsCoreOption {
  const spectra = requiredInput(spec, "spectra");
  const diagnostics = requiredInput(spec, "diagnostics");
  const coeff = (spec.options?.coefficient as string) ?? "abs_w_hat";
  const chosen = seriesTimes(spec, uniqueValues(column(spectra, "t")));
  const series: object[] = [];
  const legends: string[] = [];
  for (const [i, time] of chosen.entries()) {
    const points = groupByTime(spectra, "k", coeff, [time])[0]
      .data.filter(([k, v]) => k >= 1 && v > 0);
    const rho = nearestStrip(diagnostics, time);
    const label = Number.isFinite(rho)
      ? `t = ${time.toPrecision(3)} (rho = ${rho.toPrecision(3)})`
      : `t = ${time.toPrecision(3)} (band-limited)`;
    legends.push(label);
    series.push({
      type: "line",
      name: label,
      data: points,
      showSymbol: false,
      lineStyle: { width: 2 },
      color: PALETTE[i % PALETTE.length],
    });
    if (Number.isFinite(rho) && points.length > 4) {
      // fitted decay line anchored mid-window: C e^{-rho (k - k0)}
      const k0 = points[Math.floor(points.length / 2)][0];
      const c0 = points[Math.floor(points.length / 2)][1];
      const fit = points
        .filter(([k]) => k >= k0)
        .map(([k]) => [k, c0 * Math.exp(-rho * (k - k0))]);
      series.push({
        type: "line",
        name: label,
        data: fit,
        showSymbol: false,
        lineStyle: { type: "dashed", width: 1 },
        color: PALETTE[i % PALETTE.length],
        tooltip: { show: false },
      });
    }
  }
  return {
    ...BASE,
    title: { text: (spec.options?.title as string) ?? "Coefficient decay" },
    legend: { data: legends, top: 28 },
    grid: { top: 80 },
    xAxis: { type: "value", name: "k" },
    yAxis: { type: "log", name: `|${coeff}|` },
    series,
  };
}

export function growthRateSeries(table: Table): {
  measured: [number, number][];
  reference: [number, number][];
} {
  const k = column(table, "k");
  const rate = column(table, "rate");
  const reference = column(table, "reference_rate");
  const measured: [number, number][] = [];
  const ref: [number, number][] = [];
  for (let i = 0; i < k.length; i++) {
    if (Number.isFinite(rate[i])) measured.push([k[i], rate[i]]);
    ref.push([k[i], reference[i]]);
  }
  return { measured, reference: ref };
}

function growthRates(spec: FigureSpec): echarts.EChartsCoreOption {
  const table = requiredInput(spec, "rates");
  const { measured, reference } = growthRateSeries(table);
  return {
    ...BASE,
    title: { text: (spec.options?.title as string) ?? "Growth rate vs wavenumber" },
    legend: { data: ["fitted rate", "k/2 reference"], top: 28 },
    grid: { top: 64 },
    xAxis: { type: "value", name: "k", minInterval: 1 },
    yAxis: { type: "value", name: "rate" },
    series: [
      { type: "scatter", name: "fitted rate", data: measured, symbolSize: 10 },
      {
        type: "line",
        name: "k/2 reference",
        data: reference,
        showSymbol: false,
        lineStyle: { type: "dashed" },
      },
    ],
  };
}

function refinementNorms(spec: FigureSpec): echarts.EChartsCoreOption {
  const table = requiredInput(spec, "refinement");
  const n = column(table, "n");
  const normColumns = table.columns.filter((c) => c.startsWith("sobolev_"));
  if (normColumns.length === 0) {
    throw new FigureError(`no sobolev_* columns in ${table.path}`);
  }
  const series = normColumns.map((name) => ({
    type: "line",
    name,
    data: column(table, name).map((v, i) => [n[i], v] as [number, number]),
    showSymbol: true,
  }));
  return {
    ...BASE,
    title: {
      text: (spec.options?.title as string) ?? "Refinement study: norms vs resolution",
    },
    legend: { data: normColumns, top: 28 },
    grid: { top: 64 },
    xAxis: { type: "log", name: "n", logBase: 2 },
    yAxis: { type: "log", name: "norm" },
    series,
  };
}

const BUILDERS: Record<FigureKind, (spec: FigureSpec) => echarts.EChartsCoreOption> = {
  interface_snapshots: interfaceSnapshots,
  amplitude_profiles: amplitudeProfiles,
  spectrum_decay: spectrumDecay,
  growth_rates: growthRates,
  refinement_norms: refinementNorms,
};

export function buildOption(spec: FigureSpec): echarts.EChartsCoreOption {
  return BUILDERS[spec.kind](spec);
}

/**
 * The renderer numbers CSS classes and clip-path ids with process-global
 * counters; renumber both by order of first appearance so identical inputs
 * give identical bytes regardless of how many charts were rendered before.
 */
export function normalizeSvgClasses(svg: string): string {
  const classes = new Map<string, string>();
  const clips = new Map<string, string>();
  return svg
    .replace(/zr\d+-cls-\d+/g, (match) => {
      if (!classes.has(match)) classes.set(match, `zr-cls-${classes.size}`);
      return classes.get(match)!;
    })
    .replace(/zr\d+-c\d+/g, (match) => {
      if (!clips.has(match)) clips.set(match, `zr-c${clips.size}`);
      return clips.get(match)!;
    });
}

/** Validate inputs, build the chart, render SVG, write the output file. */
export function render(spec: FigureSpec): string {
  const option = buildOption(spec); // throws before anything is written
  const chart = echarts.init(null, null, {
    renderer: "svg",
    ssr: true,
    width: spec.width ?? 760,
    height: spec.height ?? 480,
  });
  try {
    chart.setOption(option);
    const svg = normalizeSvgClasses(chart.renderToSVGString());
    mkdirSync(dirname(spec.output), { recursive: true });
    writeFileSync(spec.output, svg, "utf-8");
  } finally {
    chart.dispose();
  }
  return spec.output;
}
