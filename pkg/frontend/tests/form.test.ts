import { describe, expect, it } from "vitest";

import {
  FORM_BOUNDS,
  STYLE_WEIGHT_PINNED,
  buildConfig,
  defaultForm,
  fieldForServerError,
  fillFromConfig,
  sliderToValue,
  validateForm,
  valueToSlider,
} from "../src/form.js";
import traffic from "./fixtures/traffic.json";

const blob = () => new Blob([new Uint8Array([1, 2, 3])]);

describe("slider mapping", () => {
  it("round-trips log-scale values", () => {
    const bounds = FORM_BOUNDS.learning_rate;
    for (const value of [1e-3, 0.05, 1, 20, 100]) {
      const back = sliderToValue(valueToSlider(value, bounds), bounds);
      expect(back).toBeCloseTo(value, 6);
    }
  });

  it("round-trips linear integer values", () => {
    const bounds = FORM_BOUNDS.num_iterations;
    for (const value of [0, 100, 300, 1000]) {
      expect(sliderToValue(valueToSlider(value, bounds), bounds)).toBe(value);
    }
  });

  it("clamps out-of-range positions", () => {
    const bounds = FORM_BOUNDS.tv_strength;
    expect(sliderToValue(-0.5, bounds)).toBe(bounds.min);
    expect(sliderToValue(1.5, bounds)).toBe(bounds.max);
  });
});

describe("validation", () => {
  it("accepts the default form once images are attached", () => {
    const form = { ...defaultForm(), contentFile: blob(), styleFile: blob() };
    expect(validateForm(form)).toEqual({});
  });

  it("requires both images before submitting", () => {
    const problems = validateForm(defaultForm());
    expect(problems.contentFile).toBeTruthy();
    expect(problems.styleFile).toBeTruthy();
  });

  it("flags out-of-bounds values on their own fields", () => {
    const form = {
      ...defaultForm(),
      contentFile: blob(),
      styleFile: blob(),
      num_iterations: 2000,
      tv_strength: 10,
    };
    const problems = validateForm(form);
    expect(Object.keys(problems).sort()).toEqual(["num_iterations", "tv_strength"]);
  });

  it("bounds are a superset of every sweep grid value", () => {
    const grids: Record<string, number[]> = {
      num_iterations: [100, 200, 300, 400, 500],
      learning_rate: [1, 5, 10, 20, 40, 60],
      tv_strength: [1e-8, 1e-6, 1e-4, 1e-2, 1e-1, 1],
      content_weight: [10, 50, 100, 200, 300],
    };
    for (const [field, values] of Object.entries(grids)) {
      const bounds = FORM_BOUNDS[field];
      for (const value of values) {
        expect(value).toBeGreaterThanOrEqual(bounds.min);
        expect(value).toBeLessThanOrEqual(bounds.max);
      }
    }
  });
});

describe("config building", () => {
  it("pins the style weight at 100", () => {
    const config = buildConfig(defaultForm());
    expect(config.style_weight).toBe(STYLE_WEIGHT_PINNED);
  });

  it("carries every tunable field", () => {
    const form = { ...defaultForm(), num_iterations: 123, learning_rate: 5, seed: 9 };
    const config = buildConfig(form);
    expect(config.num_iterations).toBe(123);
    expect(config.learning_rate).toBe(5);
    expect(config.seed).toBe(9);
    expect(config.optimizer).toBe("lbfgs");
  });
});

describe("preset fill", () => {
  it("recommended preset from recorded traffic sets the documented values", () => {
    const presets = traffic.presets as Record<string, Record<string, unknown>>;
    const filled = fillFromConfig(defaultForm(), presets.recommended);
    expect(filled.num_iterations).toBe(300);
    expect(filled.tv_strength).toBe(1e-6);
    expect(filled.optimizer).toBe("lbfgs");
    expect(filled.content_weight).toBe(100);
  });

  it("keeps attached files when filling", () => {
    const form = { ...defaultForm(), contentFile: blob(), styleFile: blob() };
    const filled = fillFromConfig(form, { num_iterations: 42 });
    expect(filled.contentFile).not.toBeNull();
    expect(filled.num_iterations).toBe(42);
  });

  it("ignores malformed preset values", () => {
    const filled = fillFromConfig(defaultForm(), {
      num_iterations: "many" as unknown as number,
    });
    expect(filled.num_iterations).toBe(defaultForm().num_iterations);
  });
});

describe("server error attribution", () => {
  it("routes the recorded 400 to the iterations field", () => {
    expect(traffic.bad_submit.status).toBe(400);
    expect(fieldForServerError(traffic.bad_submit.body.detail)).toBe("num_iterations");
  });

  it("routes image errors to the upload fields", () => {
    expect(fieldForServerError("missing image upload field 'style'")).toBe("style");
  });

  it("returns null for unattributable messages", () => {
    expect(fieldForServerError("queue is full")).toBeNull();
  });
});
