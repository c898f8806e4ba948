#!/usr/bin/env node
// Render solver CSV reports as deterministic SVG figures.
//
// usage:
//   nlslab-plot <decay|envelope|virial|sweep-grid> --in report.csv [--in more.csv]
//               --out figure.svg [--log-y | --linear-y] [--title text]
//
// decay defaults to a log y axis, the other kinds to linear; --log-y and
// --linear-y override. Exit codes: 0 written, 1 input problem (missing
// column, empty table, unreadable file), 2 usage error.

import { parseArgs } from "node:util";

import { FigureKind, KINDS, writeFigure } from "./figures";

const USAGE =
  "usage: nlslab-plot <decay|envelope|virial|sweep-grid> --in report.csv [--in more.csv] --out figure.svg [--log-y | --linear-y] [--title text]";

export function run(argv: string[]): number {
  let positionals: string[];
  let values: {
    in?: string[];
    out?: string;
    "log-y"?: boolean;
    "linear-y"?: boolean;
    title?: string;
  };
  try {
    ({ positionals, values } = parseArgs({
      args: argv,
      allowPositionals: true,
      options: {
        in: { type: "string", multiple: true },
        out: { type: "string" },
        "log-y": { type: "boolean" },
        "linear-y": { type: "boolean" },
        title: { type: "string" },
      },
    }));
  } catch (err) {
    console.error(`plot: ${err instanceof Error ? err.message : String(err)}`);
    console.error(USAGE);
    return 2;
  }

  const kind = positionals[0];
  if (positionals.length !== 1 || !(KINDS as readonly string[]).includes(kind)) {
    console.error(`plot: expected one figure kind out of ${KINDS.join(", ")}`);
    console.error(USAGE);
    return 2;
  }
  const inputs = values.in ?? [];
  if (inputs.length === 0) {
    console.error("plot: at least one --in file is required");
    console.error(USAGE);
    return 2;
  }
  if (!values.out) {
    console.error("plot: --out is required");
    console.error(USAGE);
    return 2;
  }
  if (values["log-y"] && values["linear-y"]) {
    console.error("plot: --log-y and --linear-y exclude each other");
    return 2;
  }
  const logY = values["log-y"] ? true : values["linear-y"] ? false : undefined;

  try {
    const out = writeFigure({
      kind: kind as FigureKind,
      inputs,
      output: values.out,
      logY,
      title: values.title,
    });
    console.log(`wrote ${out}`);
    return 0;
  } catch (err) {
    if (err instanceof Error) {
      console.error(`plot: ${err.message}`);
      return 1;
    }
    throw err;
  }
}

if (typeof require !== "undefined" && require.main === module) {
  process.exit(run(process.argv.slice(2)));
}
