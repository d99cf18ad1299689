// @vitest-environment happy-dom
import { describe, expect, it, vi } from "vitest";

import { buildBoard } from "../src/board.js";
import { buildCoverageGrid } from "../src/grid.js";
import { renderBoard, renderGrid } from "../src/render.js";
import type { SchedulePayload, SwapRequest } from "../src/types.js";

function req(over: Partial<SwapRequest> = {}): SwapRequest {
  return {
    id: "req-0001",
    requester: "ta-ann",
    shift_id: "oh-mon-10",
    occurrence_date: "2026-09-07",
    duration_of_change: { kind: "OneOff" },
    reason: "doctor visit",
    state: "Submitted",
    created_at: "2026-09-01T10:00:00+00:00",
    claimed_by: null,
    resolution: null,
    revert_date: null,
    ...over,
  };
}

const noop = { onClaim: () => {}, onResolve: () => {} };

describe("renderBoard", () => {
  it("renders one column per state with card details", () => {
    const root = document.createElement("div");
    renderBoard(root, buildBoard([req()]), new Map(), noop);

    const columns = root.querySelectorAll(".board-column");
    expect(columns.length).toBe(4);
    expect(columns[0].querySelector(".column-title")?.textContent).toBe("Submitted (1)");

    const card = root.querySelector<HTMLElement>(".card");
    expect(card?.dataset.requestId).toBe("req-0001");
    expect(card?.textContent).toContain("ta-ann");
    expect(card?.textContent).toContain("doctor visit");
  });

  it("wires the Claim button on submitted cards", () => {
    const root = document.createElement("div");
    const onClaim = vi.fn();
    renderBoard(root, buildBoard([req()]), new Map(), { ...noop, onClaim });

    root.querySelector<HTMLButtonElement>("[data-action=claim]")!.click();
    expect(onClaim).toHaveBeenCalledWith("req-0001");
  });

  it("offers substitutes and cancel on claimed cards", () => {
    const root = document.createElement("div");
    const onResolve = vi.fn();
    const claimed = req({ state: "Claimed", claimed_by: "ta-ben" });
    renderBoard(
      root,
      buildBoard([claimed]),
      new Map([[claimed.id, ["ta-cal", "ta-dee"]]]),
      { ...noop, onResolve },
    );

    const select = root.querySelector<HTMLSelectElement>("[data-action=substitute]")!;
    expect([...select.options].map((o) => o.value)).toEqual(["ta-cal", "ta-dee"]);

    select.value = "ta-dee";
    root.querySelector<HTMLButtonElement>("[data-action=replace]")!.click();
    expect(onResolve).toHaveBeenCalledWith("req-0001", {
      kind: "Replacement",
      substitute: "ta-dee",
    });

    root.querySelector<HTMLButtonElement>("[data-action=cancel]")!.click();
    expect(onResolve).toHaveBeenCalledWith("req-0001", { kind: "Cancelled" });
  });

  it("disables Replace when nobody can cover", () => {
    const root = document.createElement("div");
    const claimed = req({ state: "Claimed", claimed_by: "ta-ben" });
    renderBoard(root, buildBoard([claimed]), new Map(), noop);
    expect(root.querySelector<HTMLButtonElement>("[data-action=replace]")!.disabled).toBe(true);
  });

  it("replaces previous content on re-render", () => {
    const root = document.createElement("div");
    renderBoard(root, buildBoard([req()]), new Map(), noop);
    renderBoard(root, buildBoard([req()]), new Map(), noop);
    expect(root.querySelectorAll(".card").length).toBe(1);
  });
});

describe("renderGrid", () => {
  const payload: SchedulePayload = {
    week: "2026-09-07",
    assignments: [],
    shifts: [
      {
        id: "a",
        kind: "OfficeHour",
        day: "Mon",
        start_minute: 480,
        duration_min: 60,
        modality: "InPerson",
        required_staff: 2,
        section_ref: null,
        label: "",
      },
      {
        id: "b",
        kind: "OfficeHour",
        day: "Tue",
        start_minute: 540,
        duration_min: 60,
        modality: "InPerson",
        required_staff: 2,
        section_ref: null,
        label: "",
      },
    ],
    coverage: [
      { shift_id: "a", required: 2, assigned: 2, tas: ["x", "y"] },
      { shift_id: "b", required: 2, assigned: 1, tas: ["z"] },
    ],
  };

  it("lays out days across and start times down", () => {
    const root = document.createElement("div");
    renderGrid(root, buildCoverageGrid(payload));

    const headers = [...root.querySelectorAll("tr")][0].querySelectorAll("th");
    expect([...headers].slice(1).map((h) => h.textContent)).toEqual([
      "Mon",
      "Tue",
      "Wed",
      "Thu",
      "Fri",
    ]);
    // two distinct start times -> header row plus two body rows
    expect(root.querySelectorAll("tr").length).toBe(3);
    expect(root.querySelector(".row-label")?.textContent).toBe("8:00");
  });

  it("classes cells by coverage and leaves gaps empty", () => {
    const root = document.createElement("div");
    renderGrid(root, buildCoverageGrid(payload));

    expect(root.querySelectorAll(".cell-ok").length).toBe(1);
    expect(root.querySelectorAll(".cell-under").length).toBe(1);
    // 2 rows x 5 days minus the two occupied cells
    expect(root.querySelectorAll(".cell-empty").length).toBe(8);

    const ok = root.querySelector<HTMLElement>(".cell-ok")!;
    expect(ok.textContent).toBe("2/2");
    expect(ok.title).toBe("x, y");
  });
});
