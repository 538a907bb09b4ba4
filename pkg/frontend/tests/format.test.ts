import { describe, expect, it } from "vitest";

import { formatPercent, formatScore } from "../src/format.js";

describe("formatPercent", () => {
  it("renders 0.83 as 83%", () => {
    expect(formatPercent(0.83)).toBe("83%");
  });

  it("rounds to the nearest whole percent", () => {
    expect(formatPercent(0.004)).toBe("0%");
    expect(formatPercent(0.005)).toBe("1%");
    expect(formatPercent(0.126)).toBe("13%");
    expect(formatPercent(0.9949)).toBe("99%");
    expect(formatPercent(1.0)).toBe("100%");
    expect(formatPercent(0.0)).toBe("0%");
  });
});

describe("formatScore", () => {
  it("is fixed-decimal", () => {
    expect(formatScore(0.5)).toBe("0.5000");
    expect(formatScore(0.123456)).toBe("0.1235");
    expect(formatScore(0.1, 2)).toBe("0.10");
  });

  it("round-trips through parseFloat to the displayed precision", () => {
    const value = 0.8362917;
    expect(parseFloat(formatScore(value))).toBeCloseTo(value, 4);
  });
});
