import { RadicalWindow, TrialBundle, strokeOnset } from './types.js';

const PALETTE = ['#4e79a7', '#f28e2b', '#59a14f', '#e15759', '#b07aa1', '#76b7b2'];

function fmt(value: number): string {
  return value.toFixed(2);
}

function span(lo: number, hi: number): number {
  return hi > lo ? hi - lo : 1;
}

export function windowColor(index: number): string {
  return PALETTE[index % PALETTE.length];
}

// Timeline view: x(t) and y(t) traces for the pressed samples of each
// stroke, radical windows as tinted bands behind them, and one vertical
// tick per stroke onset.  Pure string-in string-out so it renders the same
// everywhere.
export function timelineSvg(
  bundle: TrialBundle,
  windows: RadicalWindow[],
  width = 720,
  height = 260,
): string {
  const { t, x, y } = bundle.samples;
  const t0 = Math.min(...t);
  const t1 = Math.max(...t);
  const tSpan = span(t0, t1);
  const sx = (tv: number) => ((tv - t0) / tSpan) * width;

  const xLo = Math.min(...x);
  const xSpan = span(xLo, Math.max(...x));
  const yLo = Math.min(...y);
  const ySpan = span(yLo, Math.max(...y));
  const vx = (v: number) => height - ((v - xLo) / xSpan) * height;
  const vy = (v: number) => height - ((v - yLo) / ySpan) * height;

  const bands = windows
    .map((w, i) => {
      const left = sx(w.tStart);
      const wide = sx(w.tEnd) - left;
      return (
        `<rect data-label="${w.label}" x="${fmt(left)}" y="0" width="${fmt(wide)}" ` +
        `height="${height}" fill="${windowColor(i)}" fill-opacity="0.18"/>`
      );
    })
    .join('');

  const onsets = bundle.strokes
    .map((_, i) => {
      const px = fmt(sx(strokeOnset(bundle, i)));
      return `<line class="onset" x1="${px}" y1="0" x2="${px}" y2="${height}" stroke="#888" stroke-dasharray="3 3"/>`;
    })
    .join('');

  const trace = (value: (i: number) => number, color: string) =>
    bundle.strokes
      .map((s) => {
        const points: string[] = [];
        for (let i = s.first; i <= s.last; i += 1) {
          points.push(`${fmt(sx(t[i]))},${fmt(value(i))}`);
        }
        return `<polyline points="${points.join(' ')}" fill="none" stroke="${color}" stroke-width="1.5"/>`;
      })
      .join('');

  return (
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}">` +
    `<g class="windows">${bands}</g>` +
    `<g class="onsets">${onsets}</g>` +
    `<g class="series-x">${trace((i) => vx(x[i]), '#1f4e79')}</g>` +
    `<g class="series-y">${trace((i) => vy(y[i]), '#a3452c')}</g>` +
    `</svg>`
  );
}

// Spatial view: pressed samples as one polyline per stroke, in-air samples
// as faint dots, an onset marker on each stroke, strokes tinted by the
// radical window that contains their onset.  Tablet y grows upward, screen
// y grows downward, so the vertical axis is flipped.
export function spatialSvg(bundle: TrialBundle, windows: RadicalWindow[], size = 320): string {
  const { x, y, p } = bundle.samples;
  const xLo = Math.min(...x);
  const xSpan = span(xLo, Math.max(...x));
  const yLo = Math.min(...y);
  const ySpan = span(yLo, Math.max(...y));
  const pad = 12;
  const inner = size - 2 * pad;
  const px = (v: number) => pad + ((v - xLo) / xSpan) * inner;
  const py = (v: number) => pad + inner - ((v - yLo) / ySpan) * inner;

  const windowIndexFor = (onset: number) =>
    windows.findIndex((w) => w.tStart <= onset && onset <= w.tEnd);

  const strokes = bundle.strokes
    .map((s, k) => {
      const points: string[] = [];
      for (let i = s.first; i <= s.last; i += 1) {
        points.push(`${fmt(px(x[i]))},${fmt(py(y[i]))}`);
      }
      const wi = windowIndexFor(strokeOnset(bundle, k));
      const color = wi < 0 ? '#444' : windowColor(wi);
      return (
        `<polyline data-stroke="${k}" points="${points.join(' ')}" fill="none" ` +
        `stroke="${color}" stroke-width="2" stroke-linejoin="round"/>`
      );
    })
    .join('');

  const hovers: string[] = [];
  for (let i = 0; i < p.length; i += 1) {
    if (p[i] === 0) {
      hovers.push(`<circle class="hover" cx="${fmt(px(x[i]))}" cy="${fmt(py(y[i]))}" r="1.5" fill="#bbb"/>`);
    }
  }

  const marks = bundle.strokes
    .map((s, k) => {
      const cx = fmt(px(x[s.first]));
      const cy = fmt(py(y[s.first]));
      return `<circle class="onset" data-stroke="${k}" cx="${cx}" cy="${cy}" r="3" fill="none" stroke="#222"/>`;
    })
    .join('');

  return (
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${size} ${size}">` +
    `<g class="hovers">${hovers.join('')}</g>` +
    `<g class="strokes">${strokes}</g>` +
    `<g class="marks">${marks}</g>` +
    `</svg>`
  );
}
