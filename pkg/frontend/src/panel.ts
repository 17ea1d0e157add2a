/**
 * MUSHRA rating panel.
 *
 * One attribute page at a time (tabs across the top), a vertical slider per
 * blinded label plus a distinctly styled REF play button, and a submit
 * button gated on the engine's missing-cell list. The engine snapshot is
 * the single source of truth: slider positions always mirror the last
 * acknowledged state, with a short-lived "pending" overlay between a
 * slider release and its acknowledgment.
 *
 * Blinding note: everything rendered here comes from the snapshot, which
 * only ever carries shuffled labels. Nothing in this module may name the
 * underlying processing variants.
 */

import type { ClientEvent, Snapshot } from "./protocol.js";
import { cellValue } from "./protocol.js";

const UNTOUCHED_VALUE = 50;   // neutral slider position before the first touch

export class RatingPanel {
  readonly root: HTMLElement;

  private send: (event: ClientEvent) => void;
  private snap: Snapshot | null = null;
  private activeAttribute = "";
  private structureKey = "";
  private pending = new Map<string, number>();   // "attr/label" -> sent value
  private missing = new Set<string>();           // highlighted after a refusal
  private missingTrial = -1;
  private popoverFor: string | null = null;
  private discloseAnchor = false;

  constructor(root: HTMLElement, send: (event: ClientEvent) => void) {
    this.root = root;
    this.send = send;
    this.root.classList.add("rating-panel");
  }

  // -- engine state in ------------------------------------------------------

  render(snap: Snapshot): void {
    this.snap = snap;
    this.pending.clear();          // snapshot *is* the acknowledged state
    if (snap.trial !== this.missingTrial) this.missing.clear();
    const key = JSON.stringify([snap.phase, snap.trial, snap.labels,
                                snap.attributes.map((a) => a.id)]);
    if (key !== this.structureKey) {
      this.structureKey = key;
      if (!snap.attributes.some((a) => a.id === this.activeAttribute)) {
        this.activeAttribute = snap.attributes[0]?.id ?? "";
      }
      this.popoverFor = null;
      this.rebuild(snap);
    }
    this.update(snap);
  }

  /** A trial advance was refused; light up the engine's unrated cells. */
  showMissing(cells: string[]): void {
    this.missing = new Set(cells);
    this.missingTrial = this.snap?.trial ?? -1;
    this.pending.clear();
    if (this.snap) this.update(this.snap);
  }

  /** Any refusal means an optimistic value was wrong: fall back to fact. */
  dropPending(): void {
    this.pending.clear();
    if (this.snap) this.update(this.snap);
  }

  setAnchorDisclosure(on: boolean): void {
    this.discloseAnchor = on;
    const note = this.root.querySelector<HTMLElement>(".anchor-note");
    if (note) note.hidden = !on;
  }

  // -- info popover ----------------------------------------------------------

  /** Toggle the description popover; exactly one info event per open. */
  toggleInfo(attribute: string): void {
    if (this.popoverFor === attribute) {
      this.closeInfo();
      return;
    }
    this.popoverFor = attribute;
    const info = this.snap?.attributes.find((a) => a.id === attribute);
    const popover = this.root.querySelector<HTMLElement>(".popover");
    if (popover) {
      popover.textContent = info ? info.description : "no description";
      popover.hidden = false;
    }
    if (info) this.send({ type: "info", attribute });
  }

  closeInfo(): void {
    this.popoverFor = null;
    const popover = this.root.querySelector<HTMLElement>(".popover");
    if (popover) popover.hidden = true;
  }

  // -- structure -------------------------------------------------------------

  private rebuild(snap: Snapshot): void {
    this.root.textContent = "";
    this.root.append(this.buildHeadline(snap));

    if (snap.phase === "finished") {
      const done = el("p", "finished-note");
      done.textContent = "All trials are complete. Thank you.";
      this.root.append(done);
      return;
    }

    const anchorNote = el("p", "anchor-note");
    anchorNote.textContent =
      "Note: one of the stimuli is a low-pass filtered anchor.";
    anchorNote.hidden = !this.discloseAnchor;
    this.root.append(anchorNote);

    if (snap.phase === "familiarization") {
      this.root.append(this.buildFreePlay(snap));
      return;
    }

    this.root.append(this.buildTabs(snap));
    this.root.append(this.buildPage(snap));
    this.root.append(this.buildTransport());
    this.root.append(this.buildSubmit());
  }

  private buildHeadline(snap: Snapshot): HTMLElement {
    const line = el("div", "trial-line");
    if (snap.phase === "familiarization") {
      line.textContent = "Familiarization: listen freely, then start the first trial.";
    } else if (snap.phase === "finished") {
      line.textContent = `Session finished (${snap.n_trials} trials).`;
    } else {
      line.textContent = `Trial ${snap.trial + 1} of ${snap.n_trials}`;
    }
    return line;
  }

  private buildFreePlay(snap: Snapshot): HTMLElement {
    const row = el("div", "free-play");
    for (const label of snap.labels) row.append(this.playButton(label));
    row.append(this.playButton(snap.reference_label));
    row.append(this.stopButton());
    return row;
  }

  private buildTabs(snap: Snapshot): HTMLElement {
    const nav = el("nav", "attr-tabs");
    for (const attr of snap.attributes) {
      const tab = document.createElement("button");
      tab.type = "button";
      tab.className = "attr-tab";
      tab.dataset.attr = attr.id;
      tab.textContent = attr.name;
      tab.addEventListener("click", () => {
        this.activeAttribute = attr.id;
        this.closeInfo();
        this.structureKey = "";            // force the page to rebuild
        if (this.snap) this.render(this.snap);
      });
      nav.append(tab);
    }
    return nav;
  }

  private buildPage(snap: Snapshot): HTMLElement {
    const attr = snap.attributes.find((a) => a.id === this.activeAttribute)
      ?? snap.attributes[0];
    const page = el("section", "attr-page");
    if (!attr) return page;

    const header = el("header", "attr-header");
    const title = el("h2", "attr-title");
    title.textContent = attr.name;
    const infoBtn = document.createElement("button");
    infoBtn.type = "button";
    infoBtn.className = "info-btn";
    infoBtn.textContent = "i";
    infoBtn.setAttribute("aria-label", `About ${attr.name}`);
    infoBtn.addEventListener("click", () => this.toggleInfo(attr.id));
    header.append(title, infoBtn);
    page.append(header);

    const popover = el("div", "popover");
    popover.hidden = true;
    page.append(popover);

    const cells = el("div", "cells");
    for (const label of snap.labels) {
      cells.append(this.buildCell(attr.id, label));
    }
    const refCell = el("div", "cell ref-cell");
    refCell.append(this.playButton(snap.reference_label));
    cells.append(refCell);
    page.append(cells);

    const scale = el("div", "scale");
    const low = el("span", "scale-low");
    low.textContent = attr.low;
    const high = el("span", "scale-high");
    high.textContent = attr.high;
    scale.append(low, high);
    page.append(scale);
    return page;
  }

  private buildCell(attribute: string, label: string): HTMLElement {
    const key = `${attribute}/${label}`;
    const cell = el("div", "cell");
    cell.dataset.cell = key;

    const value = document.createElement("output");
    value.className = "cell-value";

    const slider = document.createElement("input");
    slider.type = "range";
    slider.min = "0";
    slider.max = "100";
    slider.step = "1";
    slider.className = "cell-slider";
    // live numeric feedback while dragging; one message on release
    slider.addEventListener("input", () => {
      value.textContent = slider.value;
      cell.classList.remove("untouched");
    });
    slider.addEventListener("change", () => {
      const v = Number(slider.value);
      this.pending.set(key, v);
      cell.classList.add("pending");
      cell.classList.remove("untouched", "missing");
      this.missing.delete(key);
      this.send({ type: "rating", attribute, label, value: v });
    });

    cell.append(value, slider, this.playButton(label));
    return cell;
  }

  private playButton(label: string): HTMLButtonElement {
    const isRef = label === (this.snap?.reference_label ?? "ref");
    const btn = document.createElement("button");
    btn.type = "button";
    btn.className = isRef ? "play-btn ref-btn" : "play-btn";
    btn.dataset.label = label;
    btn.textContent = isRef ? "REF" : label;
    btn.addEventListener("click", () => this.send({ type: "play", label }));
    return btn;
  }

  private stopButton(): HTMLButtonElement {
    const btn = document.createElement("button");
    btn.type = "button";
    btn.className = "stop-btn";
    btn.textContent = "Stop";
    btn.addEventListener("click", () => this.send({ type: "stop" }));
    return btn;
  }

  private buildTransport(): HTMLElement {
    const row = el("div", "transport-row");
    row.append(this.stopButton());
    const status = el("span", "transport-status");
    row.append(status);
    return row;
  }

  private buildSubmit(): HTMLElement {
    const row = el("div", "submit-row");
    const btn = document.createElement("button");
    btn.type = "button";
    btn.className = "submit-btn";
    btn.textContent = "Submit trial";
    btn.addEventListener("click", () => this.send({ type: "next" }));
    row.append(btn);
    return row;
  }

  // -- value refresh ---------------------------------------------------------

  private update(snap: Snapshot): void {
    const headline = this.root.querySelector(".trial-line");
    if (headline) headline.replaceWith(this.buildHeadline(snap));

    for (const cell of this.root.querySelectorAll<HTMLElement>(".cell[data-cell]")) {
      const key = cell.dataset.cell!;
      const [attribute, label] = key.split("/");
      const acknowledged = cellValue(snap, attribute!, label!);
      const pending = this.pending.get(key);
      const shown = pending ?? acknowledged;
      const slider = cell.querySelector<HTMLInputElement>(".cell-slider")!;
      const value = cell.querySelector<HTMLElement>(".cell-value")!;
      slider.value = String(shown ?? UNTOUCHED_VALUE);
      value.textContent = shown === null || shown === undefined ? "" : String(shown);
      cell.classList.toggle("untouched", shown === null || shown === undefined);
      cell.classList.toggle("pending", pending !== undefined);
      cell.classList.toggle("missing",
                            this.missing.has(key) && acknowledged === null);
    }

    for (const tab of this.root.querySelectorAll<HTMLElement>(".attr-tab")) {
      const id = tab.dataset.attr!;
      tab.classList.toggle("active", id === this.activeAttribute);
      tab.classList.toggle("incomplete",
                           snap.missing.some((m) => m.startsWith(id + "/")));
    }

    for (const btn of this.root.querySelectorAll<HTMLElement>(".play-btn")) {
      btn.classList.toggle("active",
                           snap.transport === "playing"
                           && snap.stimulus === btn.dataset.label);
    }

    const status = this.root.querySelector<HTMLElement>(".transport-status");
    if (status) {
      status.textContent = snap.transport === "playing"
        ? `playing ${snap.stimulus ?? ""}` : "stopped";
    }

    const submit = this.root.querySelector<HTMLButtonElement>(".submit-btn");
    if (submit) submit.disabled = snap.missing.length > 0;
  }
}

function el(tag: string, className: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  return node;
}
