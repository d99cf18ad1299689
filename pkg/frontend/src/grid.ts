import type { SchedulePayload } from "./types.js";

export const WEEKDAYS = ["Mon", "Tue", "Wed", "Thu", "Fri"] as const;

export interface GridCell {
  day: string;
  startMinute: number;
  shiftIds: string[];
  required: number;
  assigned: number;
  tas: string[];
  undercovered: boolean;
}

export interface CoverageGrid {
  days: readonly string[];
  startMinutes: number[];
  cells: Map<string, GridCell>;
}

export function cellKey(day: string, startMinute: number): string {
  return `${day}:${startMinute}`;
}

export function minuteLabel(startMinute: number): string {
  const h = Math.floor(startMinute / 60);
  const m = startMinute % 60;
  return `${h}:${String(m).padStart(2, "0")}`;
}

// Office-hour coverage as a weekday-by-start-time grid. A cell is
// undercovered when any shift inside it has fewer TAs than it requires;
// aggregating first would let an overstaffed slot hide a gap next door.
export function buildCoverageGrid(payload: SchedulePayload): CoverageGrid {
  const coverage = new Map(payload.coverage.map((c) => [c.shift_id, c]));
  const cells = new Map<string, GridCell>();
  const starts = new Set<number>();

  for (const shift of payload.shifts) {
    if (shift.kind !== "OfficeHour") continue;
    const key = cellKey(shift.day, shift.start_minute);
    starts.add(shift.start_minute);
    let cell = cells.get(key);
    if (!cell) {
      cell = {
        day: shift.day,
        startMinute: shift.start_minute,
        shiftIds: [],
        required: 0,
        assigned: 0,
        tas: [],
        undercovered: false,
      };
      cells.set(key, cell);
    }
    cell.shiftIds.push(shift.id);
    const cov = coverage.get(shift.id);
    const required = cov?.required ?? shift.required_staff;
    const assigned = cov?.assigned ?? 0;
    cell.required += required;
    cell.assigned += assigned;
    if (assigned < required) cell.undercovered = true;
    for (const ta of cov?.tas ?? []) {
      if (!cell.tas.includes(ta)) cell.tas.push(ta);
    }
  }

  return {
    days: WEEKDAYS,
    startMinutes: [...starts].sort((a, b) => a - b),
    cells,
  };
}

export function undercoveredCount(grid: CoverageGrid): number {
  let n = 0;
  for (const cell of grid.cells.values()) {
    if (cell.undercovered) n += 1;
  }
  return n;
}
