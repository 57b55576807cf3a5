"use strict";

const $ = (id) => document.getElementById(id);

function el(tag, attrs, ...children) {
  const node = document.createElement(tag);
  Object.entries(attrs || {}).forEach(([k, v]) => node.setAttribute(k, v));
  children.forEach((c) => node.append(c));
  return node;
}

function fail(message) {
  const banner = $("banner");
  banner.textContent = message;
  banner.hidden = false;
  document.querySelector("main").hidden = true;
}

function checkShape(report) {
  const required = ["schema_version", "tool_name", "tool_version", "creation_time", "faults",
    "problem_details", "total_tests", "test_file_paths", "test_cases"];
  const missing = required.filter((k) => !(k in report));
  if (missing.length) throw new Error("report.json is missing " + missing.join(", "));
}

function renderSummary(report) {
  const byCode = {};
  report.faults.forEach((f) => { byCode[f.code] = (byCode[f.code] || 0) + 1; });
  const rest = report.problem_details.rest || { endpoint_count: 0, endpoints: [] };
  const dl = el("dl");
  const row = (k, v) => { dl.append(el("dt", {}, k), el("dd", {}, String(v))); };
  row("Created", report.creation_time);
  row("Tool", report.tool_name + " " + report.tool_version);
  row("Endpoints", rest.endpoint_count);
  row("Test cases", report.total_tests);
  row("Faults", report.faults.length);
  const codes = Object.keys(byCode);
  row("Faults by code", codes.length ? codes.map((c) => c + ": " + byCode[c]).join(", ") : "none");
  (report.notes || []).forEach((n) => row("Note", n));
  $("summary").append(dl);
}

function renderEndpoints(report) {
  const rest = report.problem_details.rest || { endpoints: [] };
  const family = $("family").value;
  const fault = $("fault").value;
  const body = document.querySelector("#endpoints tbody");
  body.replaceChildren();
  const shown = rest.endpoints.filter((e) =>
    (!family || e.observed_statuses.some((s) => String(Math.floor(s / 100)) === family)) &&
    (!fault || e.fault_codes.includes(Number(fault))));
  $("endpoint-empty").hidden = shown.length > 0;
  shown.forEach((e) => {
    const statuses = el("td");
    e.observed_statuses.forEach((s) => statuses.append(el("span", { class: "badge s" + Math.floor(s / 100) }, String(s))));
    const faults = el("td");
    e.fault_codes.forEach((c) => faults.append(el("span", { class: "badge fault" }, String(c))));
    const covering = report.test_cases.filter((t) => t.operations_called.includes(e.identity)).map((t) => t.name);
    body.append(el("tr", {}, el("td", {}, e.identity), statuses, faults, el("td", {}, covering.join(", ") || "-")));
  });
}

async function showSource(test) {
  const out = $("source");
  try {
    const res = await fetch(test.file);
    if (!res.ok) throw new Error(res.status);
    const lines = (await res.text()).split("\n");
    out.textContent = lines.slice(test.start_line - 1, test.end_line).join("\n");
  } catch (e) {
    out.textContent = "Could not load " + test.file;
  }
}

function renderTests(report) {
  const list = $("tests");
  report.test_cases.forEach((t) => {
    const item = el("li", {}, t.name + " (" + t.file + ":" + t.start_line + "-" + t.end_line + ")");
    item.addEventListener("click", () => showSource(t));
    list.append(item);
  });
}

async function main() {
  let report;
  try {
    const res = await fetch("report.json");
    if (!res.ok) throw new Error("report.json returned " + res.status);
    report = await res.json();
    checkShape(report);
  } catch (e) {
    fail("Cannot load report: " + e.message);
    return;
  }
  const codes = [...new Set(((report.problem_details.rest || {}).endpoints || []).flatMap((e) => e.fault_codes))].sort();
  codes.forEach((c) => $("fault").append(el("option", {}, String(c))));
  renderSummary(report);
  renderEndpoints(report);
  renderTests(report);
  $("family").addEventListener("change", () => renderEndpoints(report));
  $("fault").addEventListener("change", () => renderEndpoints(report));
}

main();
