import type { RiskLevel } from "./types";

// Fixed badge color tokens. These four values are part of the UI contract:
// High is dark red, Medium orange, Low amber, Engaged green.
export const RISK_COLORS: Record<RiskLevel, string> = {
  High: "#c62828",
  Medium: "#ef6c00",
  Low: "#f9a825",
  Engaged: "#2e7d32",
};

export const RISK_ORDER: RiskLevel[] = ["High", "Medium", "Low", "Engaged"];

export function riskBadge(level: RiskLevel): HTMLSpanElement {
  const el = document.createElement("span");
  el.className = "badge";
  el.dataset.level = level;
  el.style.backgroundColor = RISK_COLORS[level];
  el.textContent = level;
  return el;
}
