// Hand-rolled SVG charts, deliberately free of clocks, ids, and randomness:
// identical input must give byte-identical output, and the tests pin that.

export interface Series {
  label: string;
  x: number[];
  y: number[];
  color: string;
  width?: number;
  dash?: string; // svg dasharray, e.g. "6 3"
  points?: boolean; // sample markers on top of the line
}

export interface Band {
  x: number[];
  lo: number[];
  hi: number[];
  fill: string;
  opacity: number;
  label?: string;
}

export interface Marker {
  x: number;
  label: string;
  color: string;
  dash?: string;
}

export interface Panel {
  title: string;
  xLabel: string;
  yLabel: string;
  series: Series[];
  bands?: Band[];
  markers?: Marker[];
  logY?: boolean;
}

export interface Layout {
  panelWidth?: number;
  panelHeight?: number;
  columns?: number;
}

export const PALETTE = [
  "#2166ac",
  "#b2182b",
  "#1b7837",
  "#762a83",
  "#e08214",
  "#35978f",
];

const MARGIN = { top: 34, right: 18, bottom: 42, left: 72 };

// Coordinate spelling: six significant digits, trailing zeros trimmed, so
// the output does not depend on accumulated float noise.
export function fmt(v: number): string {
  if (!Number.isFinite(v)) {
    return "0";
  }
  const s = v.toPrecision(6);
  if (s.includes("e")) {
    return s;
  }
  if (s.includes(".")) {
    return s.replace(/0+$/, "").replace(/\.$/, "");
  }
  return s;
}

export function fmtTick(v: number): string {
  if (v === 0) {
    return "0";
  }
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) {
    const s = v.toExponential(1);
    return (s.includes(".0e") ? v.toExponential(0) : s).replace("e+", "e");
  }
  const s = v.toPrecision(4);
  if (s.includes(".")) {
    return s.replace(/0+$/, "").replace(/\.$/, "");
  }
  return s;
}

export function escapeText(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function niceNum(range: number, round: boolean): number {
  const exp = Math.floor(Math.log10(range));
  const f = range / 10 ** exp;
  let nf: number;
  if (round) {
    nf = f < 1.5 ? 1 : f < 3 ? 2 : f < 7 ? 5 : 10;
  } else {
    nf = f <= 1 ? 1 : f <= 2 ? 2 : f <= 5 ? 5 : 10;
  }
  return nf * 10 ** exp;
}

export function linearTicks(lo: number, hi: number, n = 5): number[] {
  if (!(hi > lo)) {
    const pad = lo === 0 ? 1 : Math.abs(lo) * 0.5;
    return linearTicks(lo - pad, hi + pad, n);
  }
  const step = niceNum(niceNum(hi - lo, false) / (n - 1), true);
  const k0 = Math.ceil(lo / step - 1e-9);
  const k1 = Math.floor(hi / step + 1e-9);
  const ticks: number[] = [];
  for (let k = k0; k <= k1; k += 1) {
    ticks.push(k * step + 0); // + 0 turns Math.ceil's -0 into +0
  }
  return ticks;
}

export function logTicks(lo: number, hi: number): number[] {
  const e0 = Math.ceil(Math.log10(lo) - 1e-9);
  const e1 = Math.floor(Math.log10(hi) + 1e-9);
  if (e1 < e0) {
    return [10 ** e0];
  }
  // cap the count so wide sweeps stay readable
  const step = Math.max(1, Math.ceil((e1 - e0) / 7));
  const ticks: number[] = [];
  for (let e = e0; e <= e1; e += step) {
    ticks.push(10 ** e);
  }
  return ticks;
}

interface Rect {
  x: number;
  y: number;
  w: number;
  h: number;
}

function finiteExtent(values: number[]): [number, number] | null {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (Number.isFinite(v)) {
      lo = Math.min(lo, v);
      hi = Math.max(hi, v);
    }
  }
  return lo <= hi ? [lo, hi] : null;
}

function pathFrom(xs: string[], ys: string[]): string {
  const parts: string[] = [];
  for (let i = 0; i < xs.length; i += 1) {
    parts.push(`${i === 0 ? "M" : "L"}${xs[i]} ${ys[i]}`);
  }
  return parts.join(" ");
}

function renderPanel(panel: Panel, rect: Rect): string {
  const plot: Rect = {
    x: rect.x + MARGIN.left,
    y: rect.y + MARGIN.top,
    w: rect.w - MARGIN.left - MARGIN.right,
    h: rect.h - MARGIN.top - MARGIN.bottom,
  };

  const xs: number[] = [];
  const ys: number[] = [];
  for (const s of panel.series) {
    xs.push(...s.x);
    ys.push(...s.y);
  }
  for (const b of panel.bands ?? []) {
    xs.push(...b.x);
    ys.push(...b.lo, ...b.hi);
  }
  for (const m of panel.markers ?? []) {
    if (Number.isFinite(m.x)) {
      xs.push(m.x);
    }
  }

  let logY = panel.logY ?? false;
  if (logY && !ys.some((v) => Number.isFinite(v) && v > 0)) {
    logY = false; // nothing positive to take a log of
  }
  const yPool = logY ? ys.filter((v) => Number.isFinite(v) && v > 0) : ys;

  let [x0, x1] = finiteExtent(xs) ?? [0, 1];
  let [y0, y1] = finiteExtent(yPool) ?? [0, 1];
  if (x0 === x1) {
    const pad = x0 === 0 ? 0.5 : Math.abs(x0) * 0.1;
    x0 -= pad;
    x1 += pad;
  }
  if (logY) {
    const span = Math.log10(y1 / y0);
    const pad = span === 0 ? 0.5 : span * 0.05;
    y0 = 10 ** (Math.log10(y0) - pad);
    y1 = 10 ** (Math.log10(y1) + pad);
  } else {
    const pad = y0 === y1 ? (y0 === 0 ? 0.5 : Math.abs(y0) * 0.1) : (y1 - y0) * 0.05;
    y0 -= pad;
    y1 += pad;
  }

  const ty = (v: number) => (logY ? Math.log10(v) : v);
  const tY0 = ty(y0);
  const tY1 = ty(y1);
  const px = (v: number) => plot.x + ((v - x0) / (x1 - x0)) * plot.w;
  const py = (v: number) => {
    const u = logY && v <= 0 ? y0 : v;
    return plot.y + plot.h - ((ty(u) - tY0) / (tY1 - tY0)) * plot.h;
  };

  const out: string[] = [];
  out.push(
    `<rect x="${fmt(plot.x)}" y="${fmt(plot.y)}" width="${fmt(plot.w)}" height="${fmt(plot.h)}" fill="#ffffff" stroke="#444444" stroke-width="1"/>`,
  );

  // gridlines and tick labels
  const xTicks = linearTicks(x0, x1).filter((v) => v >= x0 && v <= x1);
  const yTicks = (logY ? logTicks(y0, y1) : linearTicks(y0, y1)).filter(
    (v) => ty(v) >= tY0 - 1e-9 && ty(v) <= tY1 + 1e-9,
  );
  for (const v of xTicks) {
    const gx = fmt(px(v));
    out.push(
      `<line x1="${gx}" y1="${fmt(plot.y)}" x2="${gx}" y2="${fmt(plot.y + plot.h)}" stroke="#dddddd" stroke-width="0.5"/>`,
    );
    out.push(
      `<text x="${gx}" y="${fmt(plot.y + plot.h + 14)}" text-anchor="middle" fill="#333333">${escapeText(fmtTick(v))}</text>`,
    );
  }
  for (const v of yTicks) {
    const gy = fmt(py(v));
    out.push(
      `<line x1="${fmt(plot.x)}" y1="${gy}" x2="${fmt(plot.x + plot.w)}" y2="${gy}" stroke="#dddddd" stroke-width="0.5"/>`,
    );
    out.push(
      `<text x="${fmt(plot.x - 6)}" y="${fmt(py(v) + 3.5)}" text-anchor="end" fill="#333333">${escapeText(fmtTick(v))}</text>`,
    );
  }

  for (const b of panel.bands ?? []) {
    const keep: number[] = [];
    for (let i = 0; i < b.x.length; i += 1) {
      if (
        Number.isFinite(b.x[i]) &&
        Number.isFinite(b.lo[i]) &&
        Number.isFinite(b.hi[i])
      ) {
        keep.push(i);
      }
    }
    if (keep.length < 2) {
      continue;
    }
    const fore = keep.map((i) => `${fmt(px(b.x[i]))},${fmt(py(b.hi[i]))}`);
    const back = keep
      .slice()
      .reverse()
      .map((i) => `${fmt(px(b.x[i]))},${fmt(py(b.lo[i]))}`);
    out.push(
      `<polygon points="${fore.concat(back).join(" ")}" fill="${b.fill}" fill-opacity="${fmt(b.opacity)}" stroke="none"/>`,
    );
  }

  for (const m of panel.markers ?? []) {
    if (!Number.isFinite(m.x) || m.x < x0 || m.x > x1) {
      continue;
    }
    const gx = fmt(px(m.x));
    const dash = m.dash ? ` stroke-dasharray="${m.dash}"` : "";
    out.push(
      `<line x1="${gx}" y1="${fmt(plot.y)}" x2="${gx}" y2="${fmt(plot.y + plot.h)}" stroke="${m.color}" stroke-width="1"${dash}/>`,
    );
    out.push(
      `<text x="${fmt(px(m.x) + 3)}" y="${fmt(plot.y + 12)}" fill="${m.color}">${escapeText(m.label)}</text>`,
    );
  }

  for (const s of panel.series) {
    const width = s.width ?? 1.5;
    const dash = s.dash ? ` stroke-dasharray="${s.dash}"` : "";
    // split the polyline at non-finite samples
    let runX: string[] = [];
    let runY: string[] = [];
    const flush = () => {
      if (runX.length >= 2) {
        out.push(
          `<path d="${pathFrom(runX, runY)}" fill="none" stroke="${s.color}" stroke-width="${fmt(width)}"${dash}/>`,
        );
      }
      runX = [];
      runY = [];
    };
    for (let i = 0; i < s.x.length; i += 1) {
      const bad =
        !Number.isFinite(s.x[i]) ||
        !Number.isFinite(s.y[i]) ||
        (logY && s.y[i] <= 0);
      if (bad) {
        flush();
        continue;
      }
      runX.push(fmt(px(s.x[i])));
      runY.push(fmt(py(s.y[i])));
    }
    flush();
    if (s.points) {
      for (let i = 0; i < s.x.length; i += 1) {
        if (!Number.isFinite(s.x[i]) || !Number.isFinite(s.y[i])) {
          continue;
        }
        if (logY && s.y[i] <= 0) {
          continue;
        }
        out.push(
          `<circle cx="${fmt(px(s.x[i]))}" cy="${fmt(py(s.y[i]))}" r="2.5" fill="${s.color}"/>`,
        );
      }
    }
  }

  // legend, top right inside the frame
  let row = 0;
  const legendX = plot.x + plot.w - 150;
  for (const s of panel.series) {
    const ly = plot.y + 14 + row * 14;
    const dash = s.dash ? ` stroke-dasharray="${s.dash}"` : "";
    out.push(
      `<line x1="${fmt(legendX)}" y1="${fmt(ly - 3.5)}" x2="${fmt(legendX + 22)}" y2="${fmt(ly - 3.5)}" stroke="${s.color}" stroke-width="2"${dash}/>`,
    );
    out.push(
      `<text x="${fmt(legendX + 28)}" y="${fmt(ly)}" fill="#333333">${escapeText(s.label)}</text>`,
    );
    row += 1;
  }
  for (const b of panel.bands ?? []) {
    if (!b.label) {
      continue;
    }
    const ly = plot.y + 14 + row * 14;
    out.push(
      `<rect x="${fmt(legendX)}" y="${fmt(ly - 9)}" width="22" height="8" fill="${b.fill}" fill-opacity="${fmt(b.opacity)}"/>`,
    );
    out.push(
      `<text x="${fmt(legendX + 28)}" y="${fmt(ly)}" fill="#333333">${escapeText(b.label)}</text>`,
    );
    row += 1;
  }

  out.push(
    `<text x="${fmt(rect.x + rect.w / 2)}" y="${fmt(rect.y + 18)}" text-anchor="middle" font-size="13" fill="#111111">${escapeText(panel.title)}</text>`,
  );
  out.push(
    `<text x="${fmt(plot.x + plot.w / 2)}" y="${fmt(rect.y + rect.h - 8)}" text-anchor="middle" fill="#333333">${escapeText(panel.xLabel)}</text>`,
  );
  out.push(
    `<text x="${fmt(rect.x + 14)}" y="${fmt(plot.y + plot.h / 2)}" text-anchor="middle" transform="rotate(-90 ${fmt(rect.x + 14)} ${fmt(plot.y + plot.h / 2)})" fill="#333333">${escapeText(panel.yLabel)}</text>`,
  );
  return out.join("\n");
}

export function renderSvg(panels: Panel[], layout: Layout = {}): string {
  if (panels.length === 0) {
    throw new Error("nothing to draw");
  }
  const pw = layout.panelWidth ?? 460;
  const ph = layout.panelHeight ?? 330;
  const cols = layout.columns ?? Math.min(2, panels.length);
  const rows = Math.ceil(panels.length / cols);
  const width = cols * pw;
  const height = rows * ph;
  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif" font-size="11">`,
  );
  parts.push(`<rect x="0" y="0" width="${width}" height="${height}" fill="#ffffff"/>`);
  panels.forEach((panel, i) => {
    const rect: Rect = {
      x: (i % cols) * pw,
      y: Math.floor(i / cols) * ph,
      w: pw,
      h: ph,
    };
    parts.push(renderPanel(panel, rect));
  });
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
