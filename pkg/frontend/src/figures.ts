// Figure assembly, one CSV schema family per kind.
//
//   decay       sweep summaries: series against the leading column, log y
//   envelope    a tracked quantity against its bound over time, slack shaded
//   virial      variance track against the exact parabola, detection marks
//   sweep-grid  small multiples, one panel per input file
//
// Rendering never modifies the inputs and never consults the clock, so a
// second render of the same file is byte-identical to the first.

import { writeFileSync } from "node:fs";
import { basename } from "node:path";

import {
  CsvError,
  MissingColumnError,
  Table,
  isNumericColumn,
  numericColumn,
  asNumber,
  readTable,
  requireColumns,
} from "./csv";
import { Band, Marker, PALETTE, Panel, Series, renderSvg } from "./svg";

export const KINDS = ["decay", "envelope", "virial", "sweep-grid"] as const;
export type FigureKind = (typeof KINDS)[number];

export interface FigureSpec {
  kind: FigureKind;
  inputs: string[];
  output: string;
  logY?: boolean; // kind-dependent default when undefined
  title?: string;
}

// verdict flags and free-text columns never make sense as plotted series
const FLAG_COLUMNS = new Set(["horizon", "bounded", "terminated_by", "reasons", "tag"]);
// sweep keys repeat a constant down track files; drop them when time is the axis
const SWEEP_KEYS = ["D", "n_humps", "k_offset"];

function stem(file: string): string {
  return basename(file).replace(/\.csv$/, "");
}

function seriesColumns(table: Table, x: string): string[] {
  const drop = new Set<string>([x, ...FLAG_COLUMNS]);
  if (x === "time") {
    for (const key of SWEEP_KEYS) {
      drop.add(key);
    }
  }
  return table.columns.filter((c) => !drop.has(c) && isNumericColumn(table, c));
}

function lineSeries(table: Table, x: string, names: string[], markers: boolean): Series[] {
  const xv = numericColumn(table, x);
  return names.map((name, i) => ({
    label: name,
    x: xv,
    y: numericColumn(table, name),
    color: PALETTE[i % PALETTE.length],
    points: markers,
  }));
}

function tablePanel(table: Table, title: string, logY: boolean): Panel {
  const x = table.columns.includes("time") ? "time" : table.columns[0];
  const names = seriesColumns(table, x);
  if (names.length === 0) {
    throw new CsvError(table.file, `no numeric series against "${x}"`);
  }
  return {
    title,
    xLabel: x,
    yLabel: "value",
    logY,
    series: lineSeries(table, x, names, table.rows.length <= 20),
  };
}

function decayPanel(table: Table, title: string, logY: boolean): Panel {
  const x = table.columns[0];
  const names = seriesColumns(table, x);
  if (names.length === 0) {
    throw new CsvError(table.file, `no numeric series against "${x}"`);
  }
  return {
    title,
    xLabel: x,
    yLabel: "value",
    logY,
    series: lineSeries(table, x, names, true),
  };
}

function envelopePanel(table: Table, title: string, logY: boolean): Panel {
  requireColumns(table, ["time"]);
  let lhs: string;
  let rhs: string;
  if (table.columns.includes("lhs") || table.columns.includes("rhs")) {
    requireColumns(table, ["lhs", "rhs"]);
    lhs = "lhs";
    rhs = "rhs";
  } else if (table.columns.includes("outside_mass") || table.columns.includes("bound")) {
    requireColumns(table, ["outside_mass", "bound"]);
    lhs = "outside_mass";
    rhs = "bound";
  } else {
    throw new MissingColumnError(table.file, "lhs");
  }
  const time = numericColumn(table, "time");
  const measured = numericColumn(table, lhs);
  const bound = numericColumn(table, rhs);
  const bands: Band[] = [
    {
      x: time,
      lo: measured,
      hi: bound,
      fill: PALETTE[0],
      opacity: 0.12,
      label: "headroom",
    },
  ];
  if (table.columns.includes("tol")) {
    const tol = numericColumn(table, "tol");
    bands.push({
      x: time,
      lo: bound,
      hi: bound.map((v, i) => v + tol[i]),
      fill: "#888888",
      opacity: 0.3,
      label: "slack",
    });
  }
  return {
    title,
    xLabel: "time",
    yLabel: "value",
    logY,
    series: [
      { label: lhs, x: time, y: measured, color: PALETTE[0], width: 1.8 },
      { label: rhs, x: time, y: bound, color: PALETTE[1], dash: "6 3" },
    ],
    bands,
  };
}

function virialPanel(table: Table, title: string, logY: boolean): Panel {
  requireColumns(table, ["time", "variance", "parabola", "bound_16e"]);
  const time = numericColumn(table, "time");
  const variance = numericColumn(table, "variance");
  const parabola = numericColumn(table, "parabola");
  const bound = numericColumn(table, "bound_16e");
  const markers: Marker[] = [];
  for (const [name, color, dash] of [
    ["t_star", PALETTE[1], "6 3"],
    ["t_detect", PALETTE[4], "2 3"],
  ] as const) {
    if (table.columns.includes(name)) {
      const at = asNumber(table.rows[0][name] ?? "");
      if (Number.isFinite(at)) {
        markers.push({ x: at, label: name, color, dash });
      }
    }
  }
  return {
    title,
    xLabel: "time",
    yLabel: "variance",
    logY,
    series: [
      { label: "variance", x: time, y: variance, color: PALETTE[0], width: 1.8 },
      { label: "parabola", x: time, y: parabola, color: PALETTE[2], dash: "6 3" },
    ],
    bands: [
      {
        x: time,
        lo: parabola.map((v, i) => v - bound[i]),
        hi: parabola.map((v, i) => v + bound[i]),
        fill: PALETTE[2],
        opacity: 0.18,
        label: "tolerance",
      },
    ],
    markers,
  };
}

export function renderFigure(spec: FigureSpec): string {
  if (spec.inputs.length === 0) {
    throw new Error("no input files given");
  }
  if (spec.kind !== "sweep-grid" && spec.inputs.length !== 1) {
    throw new Error(`kind "${spec.kind}" takes exactly one input file`);
  }
  const logY = spec.logY ?? spec.kind === "decay";
  if (spec.kind === "sweep-grid") {
    const panels = spec.inputs.map((file) => {
      const table = readTable(file);
      return tablePanel(table, stem(file), logY);
    });
    return renderSvg(panels, { columns: Math.min(2, panels.length) });
  }
  const table = readTable(spec.inputs[0]);
  const title = spec.title ?? stem(spec.inputs[0]);
  let panel: Panel;
  if (spec.kind === "decay") {
    panel = decayPanel(table, title, logY);
  } else if (spec.kind === "envelope") {
    panel = envelopePanel(table, title, logY);
  } else {
    panel = virialPanel(table, title, logY);
  }
  return renderSvg([panel]);
}

export function writeFigure(spec: FigureSpec): string {
  const svg = renderFigure(spec);
  writeFileSync(spec.output, svg);
  return spec.output;
}
