import { describe, expect, it } from "vitest";

import { buildTrendChart } from "../src/chart.js";
import { FakeService, FLAT_ATTRIBUTE, FLAT_VALUE } from "./fake_service.js";

const service = new FakeService();

describe("buildTrendChart", () => {
  it("draws one polyline per attribute with the served values, untouched", () => {
    const striped = { attribute: "striped", weeks: service.trendRows("striped") };
    const floral = { attribute: "floral", weeks: service.trendRows("floral") };
    const chart = buildTrendChart([
      { attribute: "striped", payload: striped },
      { attribute: "floral", payload: floral },
    ]);
    expect(chart.series).toHaveLength(2);
    expect(chart.series[0]!.values).toEqual(striped.weeks.map((w) => w[2]));
    expect(chart.series[1]!.values).toEqual(floral.weeks.map((w) => w[2]));
    for (const series of chart.series) {
      expect(series.polyline.split(" ")).toHaveLength(12);
      series.points.forEach((point, i) => {
        expect(point.value).toBe(series.values[i]);
      });
    }
  });

  it("keeps legend entries in selection order", () => {
    const chart = buildTrendChart([
      { attribute: "floral", payload: { attribute: "floral", weeks: service.trendRows("floral") } },
      { attribute: "striped", payload: { attribute: "striped", weeks: service.trendRows("striped") } },
    ]);
    expect(chart.legend).toEqual(["floral", "striped"]);
    const reversed = buildTrendChart([
      { attribute: "striped", payload: { attribute: "striped", weeks: service.trendRows("striped") } },
      { attribute: "floral", payload: { attribute: "floral", weeks: service.trendRows("floral") } },
    ]);
    expect(reversed.legend).toEqual(["striped", "floral"]);
  });

  it("routes a 404'd attribute to the unavailable list, not a line", () => {
    const chart = buildTrendChart([
      { attribute: "striped", payload: { attribute: "striped", weeks: service.trendRows("striped") } },
      { attribute: "rivets", payload: null },
    ]);
    expect(chart.legend).toEqual(["striped"]);
    expect(chart.unavailable).toEqual(["rivets"]);
    expect(chart.series).toHaveLength(1);
  });

  it("renders a flat trend as a horizontal polyline", () => {
    const rows = service.trendRows(FLAT_ATTRIBUTE);
    expect(new Set(rows.map((w) => w[2]))).toEqual(new Set([FLAT_VALUE]));
    const chart = buildTrendChart([
      { attribute: FLAT_ATTRIBUTE, payload: { attribute: FLAT_ATTRIBUTE, weeks: rows } },
    ]);
    const ys = new Set(chart.series[0]!.points.map((p) => p.y));
    expect(ys.size).toBe(1);
    const xs = chart.series[0]!.points.map((p) => p.x);
    expect(new Set(xs).size).toBe(xs.length);
  });

  it("aligns series with different week coverage on a shared axis", () => {
    const longRows = service.trendRows("striped");
    const shortRows = longRows.slice(4, 8);
    const chart = buildTrendChart([
      { attribute: "striped", payload: { attribute: "striped", weeks: longRows } },
      { attribute: "floral", payload: { attribute: "floral", weeks: shortRows } },
    ]);
    expect(chart.weekLabels).toHaveLength(12);
    const short = chart.series[1]!;
    expect(short.points).toHaveLength(4);
    const long = chart.series[0]!;
    expect(short.points[0]!.x).toBe(long.points[4]!.x);
  });
});
