// Typed access to the solver's CSV reports.
//
// The writer upstream never quotes and keeps one header row, so parsing is
// structurally simple; papaparse still does the splitting. What this module
// adds is the error taxonomy the CLI turns into diagnostics: a missing
// column names itself and the file, an empty table refuses to render.

import { readFileSync } from "node:fs";
import Papa from "papaparse";

export class CsvError extends Error {
  readonly file: string;

  constructor(file: string, message: string) {
    super(`${file}: ${message}`);
    this.name = "CsvError";
    this.file = file;
  }
}

export class MissingColumnError extends CsvError {
  readonly column: string;

  constructor(file: string, column: string) {
    super(file, `missing required column "${column}"`);
    this.name = "MissingColumnError";
    this.column = column;
  }
}

export class EmptyCsvError extends CsvError {
  constructor(file: string) {
    super(file, "no data rows");
    this.name = "EmptyCsvError";
  }
}

export interface Table {
  readonly file: string;
  readonly columns: string[];
  readonly rows: Record<string, string>[];
}

export function readTable(file: string): Table {
  const text = readFileSync(file, "utf8").trim();
  if (text === "") {
    throw new EmptyCsvError(file);
  }
  const parsed = Papa.parse<Record<string, string>>(text, {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0];
    const where = first.row === undefined ? "" : ` (row ${first.row})`;
    throw new CsvError(file, `${first.message}${where}`);
  }
  const columns = parsed.meta.fields ?? [];
  if (columns.length === 0 || parsed.data.length === 0) {
    throw new EmptyCsvError(file);
  }
  return { file, columns, rows: parsed.data };
}

export function requireColumns(table: Table, names: string[]): void {
  for (const name of names) {
    if (!table.columns.includes(name)) {
      throw new MissingColumnError(table.file, name);
    }
  }
}

// The solver writes non-finite floats the way Python spells them.
const SPECIAL: Record<string, number> = {
  nan: NaN,
  inf: Infinity,
  "+inf": Infinity,
  "-inf": -Infinity,
};

export function asNumber(cell: string): number {
  const word = cell.trim().toLowerCase();
  if (word in SPECIAL) {
    return SPECIAL[word];
  }
  return cell.trim() === "" ? NaN : Number(cell);
}

export function isNumericColumn(table: Table, name: string): boolean {
  return table.rows.every((row) => {
    const cell = (row[name] ?? "").trim();
    if (cell === "") {
      return false;
    }
    return cell.toLowerCase() in SPECIAL || Number.isFinite(Number(cell));
  });
}

export function numericColumn(table: Table, name: string): number[] {
  requireColumns(table, [name]);
  return table.rows.map((row) => asNumber(row[name] ?? ""));
}
