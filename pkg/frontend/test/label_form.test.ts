import { describe, expect, it } from "vitest";

import {
  ALL_FIELDS,
  HALLUCINATION_FIELDS,
  METRIC_FIELDS,
  emptyForm,
  renderLabelForm,
  toLabelsBody,
  validateForm,
} from "../src/label_form";

describe("label form state", () => {
  it("starts with every judgment unset", () => {
    const form = emptyForm();
    expect(Object.keys(form.values)).toHaveLength(7);
    expect(Object.values(form.values).every((v) => v === null)).toBe(true);
  });

  it("requires an annotator id", () => {
    expect(validateForm(emptyForm())).toEqual(["annotator id is required"]);
    expect(validateForm({ ...emptyForm(), annotatorId: "   " })).toHaveLength(1);
    expect(validateForm({ ...emptyForm(), annotatorId: "rater-1" })).toEqual([]);
  });

  it("serializes judgments with nulls for unset fields", () => {
    const form = emptyForm();
    form.annotatorId = " rater-1 ";
    form.values.strategy = true;
    form.values.hallucination_in_prediction = false;
    expect(toLabelsBody(form)).toEqual({
      annotator_id: "rater-1",
      strategy: true,
      category: null,
      goal: null,
      action: null,
      intent: null,
      hallucination_in_explanation: null,
      hallucination_in_prediction: false,
    });
  });
});

describe("renderLabelForm", () => {
  it("shows five metric toggles and two hallucination toggles", () => {
    const html = renderLabelForm(emptyForm());
    for (const field of ALL_FIELDS) {
      expect(html).toContain(`data-field="${field}"`);
    }
    expect(METRIC_FIELDS).toHaveLength(5);
    expect(HALLUCINATION_FIELDS).toHaveLength(2);
    expect(html).toMatchSnapshot();
  });

  it("reflects chosen judgments in the selects", () => {
    const form = emptyForm();
    form.annotatorId = "rater-1";
    form.values.action = true;
    form.values.intent = false;
    const html = renderLabelForm(form);
    const actionField = html.split('data-field="')[4];
    expect(actionField).toContain("<option selected>yes</option>");
    expect(html).toMatchSnapshot();
  });

  it("lists problems and disables submit until they are fixed", () => {
    const html = renderLabelForm(emptyForm(), validateForm(emptyForm()));
    expect(html).toContain("annotator id is required");
    expect(html).toContain("disabled");
  });
});
