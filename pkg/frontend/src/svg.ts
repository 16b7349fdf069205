/**
 * Minimal hand-rolled SVG chart builder: line overlays with linear or
 * log-log axes, tick labels, legend and free annotations.  Output is a
 * deterministic string, so figure identity can be checked by hashing.
 */

export interface Curve {
  x: number[];
  y: number[];
  color: string;
  label: string;
  width?: number;
  dash?: string;
  markers?: boolean;
}

export interface Annotation {
  text: string;
  color?: string;
}

export interface ChartOpts {
  title: string;
  xLabel: string;
  yLabel: string;
  curves: Curve[];
  logLog?: boolean;
  annotations?: Annotation[];
  width?: number;
  height?: number;
}

const PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
  "#8c564b", "#17becf"];

export function paletteColor(i: number): string {
  return PALETTE[i % PALETTE.length];
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function niceTicks(min: number, max: number, count: number): number[] {
  const range = max - min || Math.abs(max) || 1;
  const rough = range / count;
  const mag = Math.pow(10, Math.floor(Math.log10(rough)));
  const step = [1, 2, 5, 10].map((m) => m * mag).find((s) => s >= rough) ?? rough;
  const ticks: number[] = [];
  for (let v = Math.ceil(min / step) * step; v <= max + 1e-9 * step; v += step) {
    ticks.push(Math.abs(v) < 1e-12 * step ? 0 : v);
  }
  return ticks;
}

function logTicks(min: number, max: number): number[] {
  const ticks: number[] = [];
  for (let e = Math.floor(min); e <= Math.ceil(max); e++) ticks.push(e);
  return ticks;
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(1);
  return String(Math.round(v * 1e6) / 1e6);
}

export function buildChart(o: ChartOpts): string {
  const W = o.width ?? 640;
  const H = o.height ?? 420;
  const m = { l: 70, r: 20, t: 40, b: 50 };
  const iw = W - m.l - m.r;
  const ih = H - m.t - m.b;

  const tx = (v: number) => (o.logLog ? Math.log10(v) : v);
  const xs = o.curves.flatMap((c) => c.x.map(tx));
  const ys = o.curves.flatMap((c) => c.y.map(tx));
  let x0 = Math.min(...xs), x1 = Math.max(...xs);
  let y0 = Math.min(...ys), y1 = Math.max(...ys);
  if (x0 === x1) { x0 -= 0.5; x1 += 0.5; }
  if (y0 === y1) { y0 -= 0.5; y1 += 0.5; }
  const padX = 0.05 * (x1 - x0), padY = 0.08 * (y1 - y0);
  x0 -= padX; x1 += padX; y0 -= padY; y1 += padY;

  const px = (v: number) => m.l + ((tx(v) - x0) / (x1 - x0)) * iw;
  const py = (v: number) => m.t + ih - ((tx(v) - y0) / (y1 - y0)) * ih;

  const parts: string[] = [];
  parts.push(`<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${H}" viewBox="0 0 ${W} ${H}">`);
  parts.push(`<rect width="${W}" height="${H}" fill="white"/>`);
  parts.push(`<text x="${W / 2}" y="20" text-anchor="middle" font-size="14" font-family="sans-serif">${esc(o.title)}</text>`);

  const xticks = o.logLog ? logTicks(x0, x1) : niceTicks(x0, x1, 6);
  const yticks = o.logLog ? logTicks(y0, y1) : niceTicks(y0, y1, 6);
  for (const v of xticks) {
    if (v < x0 || v > x1) continue;
    const X = m.l + ((v - x0) / (x1 - x0)) * iw;
    parts.push(`<line x1="${X.toFixed(2)}" y1="${m.t}" x2="${X.toFixed(2)}" y2="${m.t + ih}" stroke="#ddd"/>`);
    const label = o.logLog ? `1e${v}` : fmt(v);
    parts.push(`<text x="${X.toFixed(2)}" y="${m.t + ih + 16}" text-anchor="middle" font-size="11" font-family="sans-serif">${label}</text>`);
  }
  for (const v of yticks) {
    if (v < y0 || v > y1) continue;
    const Y = m.t + ih - ((v - y0) / (y1 - y0)) * ih;
    parts.push(`<line x1="${m.l}" y1="${Y.toFixed(2)}" x2="${m.l + iw}" y2="${Y.toFixed(2)}" stroke="#ddd"/>`);
    const label = o.logLog ? `1e${v}` : fmt(v);
    parts.push(`<text x="${m.l - 6}" y="${(Y + 4).toFixed(2)}" text-anchor="end" font-size="11" font-family="sans-serif">${label}</text>`);
  }
  parts.push(`<rect x="${m.l}" y="${m.t}" width="${iw}" height="${ih}" fill="none" stroke="#444"/>`);
  parts.push(`<text x="${m.l + iw / 2}" y="${H - 12}" text-anchor="middle" font-size="12" font-family="sans-serif">${esc(o.xLabel)}</text>`);
  parts.push(`<text x="16" y="${m.t + ih / 2}" text-anchor="middle" font-size="12" font-family="sans-serif" transform="rotate(-90 16 ${m.t + ih / 2})">${esc(o.yLabel)}</text>`);

  for (const c of o.curves) {
    const pts = c.x.map((vx, i) => `${px(vx).toFixed(3)},${py(c.y[i]).toFixed(3)}`).join(" ");
    const dash = c.dash ? ` stroke-dasharray="${c.dash}"` : "";
    parts.push(`<polyline points="${pts}" fill="none" stroke="${c.color}" stroke-width="${c.width ?? 1.4}"${dash}/>`);
    if (c.markers) {
      for (let i = 0; i < c.x.length; i++) {
        parts.push(`<circle cx="${px(c.x[i]).toFixed(3)}" cy="${py(c.y[i]).toFixed(3)}" r="3" fill="${c.color}"/>`);
      }
    }
  }

  let ly = m.t + 14;
  for (const c of o.curves) {
    parts.push(`<line x1="${m.l + iw - 150}" y1="${ly - 4}" x2="${m.l + iw - 126}" y2="${ly - 4}" stroke="${c.color}" stroke-width="2"${c.dash ? ` stroke-dasharray="${c.dash}"` : ""}/>`);
    parts.push(`<text x="${m.l + iw - 120}" y="${ly}" font-size="11" font-family="sans-serif">${esc(c.label)}</text>`);
    ly += 16;
  }
  for (const a of o.annotations ?? []) {
    parts.push(`<text x="${m.l + 8}" y="${ly}" font-size="11" font-family="sans-serif" fill="${a.color ?? "#222"}">${esc(a.text)}</text>`);
    ly += 16;
  }
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
