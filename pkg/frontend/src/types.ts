// Wire types for the /v1 API. Field names match the JSON payloads exactly;
// the dashboard renders these values as-is and computes none of them.

export type RiskLevel = "High" | "Medium" | "Low" | "Engaged";

export interface RiskSummaryRow {
  samples: number;
  predicted_disengaged: number;
}

export interface ModelMetrics {
  PPV: number;
  NPV: number;
  TPR: number;
  TNR: number;
  FPR: number;
  FNR: number;
  F1_engaged: number;
  F1_disengaged: number;
  BA: number;
  AUC: number;
  in_sample?: boolean;
  model_kind?: string;
  [key: string]: unknown;
}

export interface GradeBin {
  grade: number;
  n_students: number;
  mean_submission_rate: number;
}

export interface CohortSummary {
  snapshotID: string;
  createdAt: string;
  risk_summary: Record<RiskLevel, RiskSummaryRow>;
  metrics: ModelMetrics | null;
  weekly_activity: Record<string, Record<string, number>>;
  grade_bins: GradeBin[];
  summary: {
    samples: number;
    attempts: number;
    students: number;
    engaged_samples: number;
    [key: string]: unknown;
  };
}

export interface QueueEntry {
  planID: string;
  studentID: string | null;
  attemptID: string;
  dateRel: number;
  riskLevel: RiskLevel;
  shapSums: Record<string, number>;
  status: string;
}

export interface QueuePayload {
  snapshotID: string;
  levels: string[];
  entries: QueueEntry[];
}

export interface AssessmentRow {
  attemptID: string;
  dateRel: number;
  level: RiskLevel;
  model_prediction: number | null;
  flags: { erratic: boolean; delayed: boolean; irregular: boolean };
}

export interface StrategyDto {
  id: string;
  name: string;
  targetBehavior: string;
  description: string;
  citationKey: string;
}

export interface PlanDto {
  planID: string;
  attemptID: string | null;
  riskLevel: RiskLevel;
  strategies: StrategyDto[];
  timing: string;
  rationale: string;
  dateRel: number | null;
  studentID: string | null;
}

export interface DecisionDto {
  planID: string;
  action: string;
  actor: string;
  timestamp: number;
  strategies: string[];
}

export interface PlanRecordDto {
  plan: PlanDto;
  status: string;
  activeStrategies: string[];
  history: string[][];
  decisions: DecisionDto[];
}

export interface StudentRisk {
  studentID: string;
  snapshotID: string;
  assessments: AssessmentRow[];
  plans: PlanRecordDto[];
}

export interface ExplanationRow {
  attemptID: string;
  dateRel: number;
  base_value: number;
  model_output: number;
  features: string[];
  attributions: number[];
  feature_values: number[] | null;
  label: string | null;
}

export interface ExplanationPayload {
  attemptID: string;
  snapshotID: string;
  explanations: ExplanationRow[];
}

export interface DependencePayload {
  attemptID: string;
  snapshotID: string;
  feature: string;
  grid: number[];
  values: number[];
  baseline: number;
  thresholds: number[];
}

export interface DecisionRequest {
  action: "Approve" | "Personalize" | "Override";
  actor: string;
  strategies?: string[];
  supersede?: boolean;
  snapshot: string;
}

export interface DecisionResponse {
  plan: PlanDto;
  status: string;
  active: string[];
  history: string[][];
  decisions: number;
}

export interface SnapshotsPayload {
  snapshots: string[];
}
