// Wire shapes, mirrored by hand from the service's JSON encoders.

export type RequestStateName =
  | "Submitted"
  | "Claimed"
  | "Resolved"
  | "Escalated";

export interface Duration {
  kind: "OneOff" | "Until";
  end?: string;
}

export interface Resolution {
  kind: "PeerSwap" | "Replacement" | "ModalityChange" | "Cancelled";
  counterparty?: string;
  counterparty_shift_id?: string;
  substitute?: string;
}

export interface SwapRequest {
  id: string;
  requester: string;
  shift_id: string;
  occurrence_date: string;
  duration_of_change: Duration;
  reason: string;
  state: RequestStateName;
  created_at: string;
  claimed_by: string | null;
  resolution: Resolution | null;
  revert_date: string | null;
}

export interface Shift {
  id: string;
  kind: string;
  day: string;
  start_minute: number;
  duration_min: number;
  modality: string;
  required_staff: number;
  section_ref: string | null;
  label: string;
}

export interface CoverageEntry {
  shift_id: string;
  required: number;
  assigned: number;
  tas: string[];
}

export interface SchedulePayload {
  week: string;
  assignments: [string, string][];
  shifts: Shift[];
  coverage: CoverageEntry[];
}

export interface HealthDoc {
  status: string;
  seq: number;
  tas: number;
  shifts: number;
}

export interface SubmitBody {
  requester: string;
  shift_id: string;
  occurrence_date: string;
  duration?: Duration;
  reason?: string;
  idempotency_key?: string;
}
