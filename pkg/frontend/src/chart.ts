/** Trend chart geometry.  Pure data in, polyline coordinates out; the DOM
 * layer only stamps these into <svg> elements.
 *
 * Plotted values are exactly the served weekly means: no smoothing, no
 * resampling.  Attributes whose series came back 404 are carried in
 * ``unavailable`` so the UI can grey out their chips instead of drawing a
 * made-up line.
 */

import type { TrendSeriesPayload } from "./types.js";

export interface ChartPoint {
  x: number;
  y: number;
  /** The served value, untouched; ``y`` is its pixel projection. */
  value: number;
  weekLabel: string;
}

export interface ChartSeries {
  attribute: string;
  values: number[];
  points: ChartPoint[];
  /** SVG polyline ``points`` attribute. */
  polyline: string;
}

export interface TrendChart {
  series: ChartSeries[];
  /** Selection order of the attributes that resolved. */
  legend: string[];
  unavailable: string[];
  weekLabels: string[];
  valueMin: number;
  valueMax: number;
  width: number;
  height: number;
}

export interface SeriesResult {
  attribute: string;
  /** null when the service answered 404 for this attribute. */
  payload: TrendSeriesPayload | null;
}

export interface ChartOptions {
  width?: number;
  height?: number;
  padding?: number;
}

function labelOf(year: number, week: number): string {
  return `${year}-W${String(week).padStart(2, "0")}`;
}

export function buildTrendChart(
  results: SeriesResult[],
  options: ChartOptions = {},
): TrendChart {
  const width = options.width ?? 640;
  const height = options.height ?? 240;
  const padding = options.padding ?? 24;

  const available = results.filter((r) => r.payload !== null);
  const unavailable = results
    .filter((r) => r.payload === null)
    .map((r) => r.attribute);

  const labelSet = new Map<string, [number, number]>();
  for (const result of available) {
    for (const [year, week] of result.payload!.weeks) {
      labelSet.set(labelOf(year, week), [year, week]);
    }
  }
  const weekLabels = [...labelSet.entries()]
    .sort((a, b) => a[1][0] - b[1][0] || a[1][1] - b[1][1])
    .map(([label]) => label);
  const slot = new Map(weekLabels.map((label, i) => [label, i]));

  let valueMin = Infinity;
  let valueMax = -Infinity;
  for (const result of available) {
    for (const [, , value] of result.payload!.weeks) {
      valueMin = Math.min(valueMin, value);
      valueMax = Math.max(valueMax, value);
    }
  }
  if (!isFinite(valueMin)) {
    valueMin = 0;
    valueMax = 1;
  }

  const innerW = width - 2 * padding;
  const innerH = height - 2 * padding;
  const span = valueMax - valueMin;
  const xOf = (label: string) =>
    weekLabels.length <= 1
      ? padding + innerW / 2
      : padding + (innerW * slot.get(label)!) / (weekLabels.length - 1);
  // A flat band projects to the vertical midline: horizontal by construction.
  const yOf = (value: number) =>
    span === 0
      ? padding + innerH / 2
      : padding + innerH * (1 - (value - valueMin) / span);

  const series: ChartSeries[] = available.map((result) => {
    const points: ChartPoint[] = result.payload!.weeks.map(
      ([year, week, value]) => {
        const weekLabel = labelOf(year, week);
        return { x: xOf(weekLabel), y: yOf(value), value, weekLabel };
      },
    );
    return {
      attribute: result.attribute,
      values: points.map((p) => p.value),
      points,
      polyline: points.map((p) => `${p.x},${p.y}`).join(" "),
    };
  });

  return {
    series,
    legend: series.map((s) => s.attribute),
    unavailable,
    weekLabels,
    valueMin,
    valueMax,
    width,
    height,
  };
}
