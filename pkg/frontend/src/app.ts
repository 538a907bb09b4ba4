/** Browser wiring.  All decisions live in the pure modules; this file only
 * moves values between them and the DOM.  Configuration is one value: the
 * service base URL (?api=... query param, else same origin).
 */

import { ApiClient } from "./api.js";
import { buildTrendChart, type SeriesResult } from "./chart.js";
import {
  emptyDraft,
  draftViolations,
  setCategory,
  setDemographic,
  setTargetDate,
  toForecastRequest,
  toggleAttribute,
  withForecast,
  type DesignDraft,
} from "./draft.js";
import { ForecastController } from "./forecast.js";
import {
  emptyTray,
  restoreVariant,
  saveVariant,
  toggleSort,
  trayView,
  type TrayState,
} from "./tray.js";
import { TaxonomyIndex } from "./taxonomy.js";
import { AGE_GROUPS, GENDERS } from "./types.js";
import {
  attributeChips,
  errorView,
  gaugeView,
  horizonView,
  GAUGE_LABEL,
} from "./ui.js";

const SERIES_COLORS = ["#2563eb", "#dc2626", "#059669", "#d97706", "#7c3aed"];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  if (text !== undefined) node.textContent = text;
  return node;
}

function defaultTargetDate(): string {
  const soon = new Date(Date.now() + 28 * 86400_000);
  return soon.toISOString().slice(0, 10);
}

class App {
  private readonly client: ApiClient;
  private readonly forecaster: ForecastController;
  private taxonomy!: TaxonomyIndex;
  private draft: DesignDraft = emptyDraft(defaultTargetDate());
  private tray: TrayState = emptyTray();
  private notice: string | null = null;
  private lastError: ReturnType<typeof errorView> = null;
  private readonly root: HTMLElement;

  constructor(root: HTMLElement, baseUrl: string) {
    this.root = root;
    this.client = new ApiClient({ baseUrl });
    this.forecaster = new ForecastController(this.client);
  }

  async start(): Promise<void> {
    this.taxonomy = new TaxonomyIndex(await this.client.taxonomy());
    this.render();
  }

  private apply(next: DesignDraft): void {
    this.draft = next;
    this.render();
  }

  private async runForecast(): Promise<void> {
    if (draftViolations(this.taxonomy, this.draft).length > 0) return;
    const request = toForecastRequest(this.draft);
    const outcome = await this.forecaster.submit(request);
    if (outcome.kind === "superseded") return;
    if (outcome.kind === "success") {
      this.lastError = null;
      this.draft = withForecast(this.draft, outcome.response);
    } else {
      this.lastError = errorView(outcome);
    }
    this.render();
  }

  private async renderChart(host: HTMLElement): Promise<void> {
    if (this.draft.attributes.length === 0) {
      host.replaceChildren(
        el("p", { class: "hint" }, "Select attributes to see their trends."),
      );
      return;
    }
    const results: SeriesResult[] = await Promise.all(
      this.draft.attributes.map(async (attribute) => {
        try {
          return { attribute, payload: await this.client.trends(attribute) };
        } catch {
          return { attribute, payload: null };
        }
      }),
    );
    const chart = buildTrendChart(results);
    const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
    svg.setAttribute("viewBox", `0 0 ${chart.width} ${chart.height}`);
    svg.setAttribute("width", String(chart.width));
    svg.setAttribute("height", String(chart.height));
    chart.series.forEach((series, i) => {
      const line = document.createElementNS(
        "http://www.w3.org/2000/svg",
        "polyline",
      );
      line.setAttribute("points", series.polyline);
      line.setAttribute("fill", "none");
      line.setAttribute("stroke", SERIES_COLORS[i % SERIES_COLORS.length]!);
      line.setAttribute("stroke-width", "2");
      line.setAttribute("data-attribute", series.attribute);
      svg.appendChild(line);
    });
    const legend = el("div", { class: "legend" });
    chart.legend.forEach((attribute, i) => {
      const entry = el("span", { class: "legend-entry" }, attribute);
      entry.style.borderColor = SERIES_COLORS[i % SERIES_COLORS.length]!;
      legend.appendChild(entry);
    });
    for (const attribute of chart.unavailable) {
      legend.appendChild(
        el("span", { class: "legend-entry unavailable" },
           `${attribute} (no trend data)`),
      );
    }
    host.replaceChildren(svg, legend);
  }

  private render(): void {
    const panel = el("div", { class: "layout" });

    const composer = el("section", { class: "composer" });
    composer.appendChild(el("h2", {}, "Compose"));

    const categorySelect = el("select", { id: "category" });
    categorySelect.appendChild(el("option", { value: "" }, "pick a category"));
    for (const name of this.taxonomy.categories()) {
      const option = el("option", { value: name }, name);
      if (name === this.draft.category) option.selected = true;
      categorySelect.appendChild(option);
    }
    categorySelect.addEventListener("change", () => {
      if (categorySelect.value) {
        this.apply(setCategory(this.taxonomy, this.draft, categorySelect.value));
      }
    });
    composer.appendChild(categorySelect);

    const chips = el("div", { class: "chips" });
    for (const chip of attributeChips(this.taxonomy, this.draft)) {
      const button = el(
        "button",
        { class: chip.selected ? "chip selected" : "chip" },
        chip.attribute,
      );
      button.disabled = !chip.enabled && !chip.selected;
      button.addEventListener("click", () =>
        this.apply(toggleAttribute(this.taxonomy, this.draft, chip.attribute)),
      );
      chips.appendChild(button);
    }
    composer.appendChild(chips);

    const genderSelect = el("select", { id: "gender" });
    const ageSelect = el("select", { id: "age-group" });
    for (const gender of GENDERS) {
      const option = el("option", { value: gender }, gender);
      if (gender === this.draft.demographic?.gender) option.selected = true;
      genderSelect.appendChild(option);
    }
    for (const age of AGE_GROUPS) {
      const option = el("option", { value: age }, age);
      if (age === this.draft.demographic?.age_group) option.selected = true;
      ageSelect.appendChild(option);
    }
    const demographicChanged = async () => {
      this.draft = setDemographic(this.draft, {
        gender: genderSelect.value,
        age_group: ageSelect.value,
      });
      // A demographic flip re-queries immediately; the score depends on it.
      if (this.draft.lastForecast !== null) await this.runForecast();
      else this.render();
    };
    genderSelect.addEventListener("change", demographicChanged);
    ageSelect.addEventListener("change", demographicChanged);
    composer.append(genderSelect, ageSelect);

    const dateInput = el("input", {
      type: "date",
      value: this.draft.targetDate,
    });
    dateInput.addEventListener("change", () =>
      this.apply(setTargetDate(this.draft, dateInput.value)),
    );
    composer.appendChild(dateInput);

    const violations = draftViolations(this.taxonomy, this.draft);
    const forecastButton = el("button", { class: "forecast" }, "Forecast");
    forecastButton.disabled = violations.length > 0;
    forecastButton.addEventListener("click", () => void this.runForecast());
    composer.appendChild(forecastButton);
    if (violations.length > 0) {
      const list = el("ul", { class: "violations" });
      for (const violation of violations) {
        list.appendChild(el("li", {}, violation));
      }
      composer.appendChild(list);
    }

    const result = el("section", { class: "result" });
    result.appendChild(el("h2", {}, "Forecast"));
    if (this.lastError) {
      result.appendChild(el("p", { class: "error" }, this.lastError.message));
      if (this.lastError.violations.length > 0) {
        const list = el("ul", { class: "violations" });
        for (const violation of this.lastError.violations) {
          list.appendChild(el("li", {}, violation));
        }
        result.appendChild(list);
      }
    }
    const response = this.draft.lastForecast;
    if (response) {
      const gauge = gaugeView(response);
      const gaugeBox = el("div", { class: "gauge" });
      gaugeBox.appendChild(el("span", { class: "gauge-label" }, gauge.label));
      gaugeBox.appendChild(el("strong", { class: "gauge-value" }, gauge.text));
      if (this.draft.stale) {
        gaugeBox.appendChild(
          el("span", { class: "stale" }, "stale: draft changed"),
        );
      }
      result.appendChild(gaugeBox);
      const line = el("ol", { class: "horizon" });
      for (const point of horizonView(response)) {
        line.appendChild(el("li", {}, `week +${point.step}: ${point.text}`));
      }
      result.appendChild(line);
      result.appendChild(
        el("p", { class: "meta" },
           `model ${response.model_version}, features: ${response.used_feature_source}`),
      );
      const saveButton = el("button", {}, "Save variant");
      saveButton.addEventListener("click", () => {
        const saved = saveVariant(this.tray, this.draft, response);
        this.tray = saved.tray;
        this.notice = saved.notice;
        this.render();
      });
      result.appendChild(saveButton);
    } else {
      result.appendChild(el("p", { class: "hint" }, `${GAUGE_LABEL}: —`));
    }

    const chartHost = el("section", { class: "chart" });
    chartHost.appendChild(el("h2", {}, "Attribute trends"));
    const chartBody = el("div", { class: "chart-body" });
    chartHost.appendChild(chartBody);
    void this.renderChart(chartBody);

    const trayBox = el("section", { class: "tray" });
    trayBox.appendChild(el("h2", {}, "Variants"));
    if (this.notice) {
      trayBox.appendChild(el("p", { class: "notice" }, this.notice));
    }
    const sortButton = el(
      "button",
      {},
      this.tray.sortByScore ? "Order saved" : "Sort by score",
    );
    sortButton.addEventListener("click", () => {
      this.tray = toggleSort(this.tray);
      this.render();
    });
    trayBox.appendChild(sortButton);
    const table = el("table");
    for (const variant of trayView(this.tray)) {
      const row = el("tr");
      row.appendChild(el("td", {}, variant.label));
      row.appendChild(el("td", {}, variant.draft.category ?? ""));
      row.appendChild(
        el("td", { class: "score" },
           gaugeView(variant.response).text),
      );
      const restore = el("button", {}, "Restore");
      restore.addEventListener("click", () => {
        this.notice = null;
        this.apply(restoreVariant(this.tray, variant.id));
      });
      const cell = el("td");
      cell.appendChild(restore);
      row.appendChild(cell);
      table.appendChild(row);
    }
    trayBox.appendChild(table);

    panel.append(composer, result, chartHost, trayBox);
    this.root.replaceChildren(panel);
  }
}

export async function main(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const baseUrl = params.get("api") ?? window.location.origin;
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app mount point");
  const app = new App(root, baseUrl);
  await app.start();
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  void main();
}
