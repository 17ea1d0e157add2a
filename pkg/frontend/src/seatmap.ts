/**
 * Top-down seat map: a 5x5 schematic of the listening area with the desk
 * and the two program sources behind it at the front of the room.
 *
 * Seats present in the dataset are clickable; the rest of the lattice is
 * drawn faintly for orientation. A click sends the seat event and marks the
 * cell "pending"; the selected highlight only follows the engine's
 * acknowledgment, so the map never claims a seat the engine refused.
 */

import type { ClientEvent, Snapshot } from "./protocol.js";

const SVG_NS = "http://www.w3.org/2000/svg";

const GRID = 5;
const CELL = 44;
const PAD = 16;
const TOP = 64;                     // room for sources + desk above row A
const WIDTH = PAD * 2 + GRID * CELL;
const HEIGHT = TOP + GRID * CELL + PAD;

export class SeatMap {
  readonly root: HTMLElement;

  private send: (event: ClientEvent) => void;
  private enabled: () => boolean;
  private svg: SVGSVGElement | null = null;
  private seatsKey = "";
  private pendingSeat: string | null = null;

  constructor(root: HTMLElement, send: (event: ClientEvent) => void,
              enabled: () => boolean = () => true) {
    this.root = root;
    this.send = send;
    this.enabled = enabled;
    this.root.classList.add("seat-map");
  }

  render(snap: Snapshot): void {
    const key = JSON.stringify([snap.seats, snap.sources]);
    if (key !== this.seatsKey || !this.svg) {
      this.seatsKey = key;
      this.rebuild(snap);
    }
    if (snap.seat === this.pendingSeat) this.pendingSeat = null;
    for (const cell of this.root.querySelectorAll<SVGElement>("[data-seat]")) {
      const id = cell.dataset.seat!;
      setClass(cell, "selected", id === snap.seat);
      setClass(cell, "pending", id === this.pendingSeat);
    }
  }

  private rebuild(snap: Snapshot): void {
    const svg = document.createElementNS(SVG_NS, "svg");
    svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
    svg.setAttribute("role", "group");
    svg.setAttribute("aria-label", "seat selection map");

    // sources at the front wall, behind the desk
    const sourceXs = spread(snap.sources, WIDTH);
    for (let k = 0; k < snap.sources; k++) {
      const g = document.createElementNS(SVG_NS, "g");
      g.setAttribute("class", "source-marker");
      const dot = document.createElementNS(SVG_NS, "circle");
      dot.setAttribute("cx", String(sourceXs[k]));
      dot.setAttribute("cy", "14");
      dot.setAttribute("r", "7");
      const text = document.createElementNS(SVG_NS, "text");
      text.setAttribute("x", String(sourceXs[k]));
      text.setAttribute("y", "18");
      text.setAttribute("text-anchor", "middle");
      text.setAttribute("class", "source-label");
      text.textContent = `S${k + 1}`;
      g.append(dot, text);
      svg.append(g);
    }

    const desk = document.createElementNS(SVG_NS, "rect");
    desk.setAttribute("class", "desk");
    desk.setAttribute("x", String(PAD + CELL));
    desk.setAttribute("y", "30");
    desk.setAttribute("width", String(WIDTH - 2 * (PAD + CELL)));
    desk.setAttribute("height", "18");
    desk.setAttribute("rx", "3");
    svg.append(desk);
    const deskLabel = document.createElementNS(SVG_NS, "text");
    deskLabel.setAttribute("class", "desk-label");
    deskLabel.setAttribute("x", String(WIDTH / 2));
    deskLabel.setAttribute("y", "43");
    deskLabel.setAttribute("text-anchor", "middle");
    deskLabel.textContent = "desk";
    svg.append(deskLabel);

    const present = new Set(snap.seats);
    for (let row = 0; row < GRID; row++) {
      for (let col = 0; col < GRID; col++) {
        const id = `${"ABCDE"[row]}${col + 1}`;
        const x = PAD + col * CELL;
        const y = TOP + row * CELL;
        const g = document.createElementNS(SVG_NS, "g");
        const rect = document.createElementNS(SVG_NS, "rect");
        rect.setAttribute("x", String(x + 3));
        rect.setAttribute("y", String(y + 3));
        rect.setAttribute("width", String(CELL - 6));
        rect.setAttribute("height", String(CELL - 6));
        rect.setAttribute("rx", "5");
        const text = document.createElementNS(SVG_NS, "text");
        text.setAttribute("x", String(x + CELL / 2));
        text.setAttribute("y", String(y + CELL / 2 + 4));
        text.setAttribute("text-anchor", "middle");
        text.textContent = id;
        g.append(rect, text);
        if (present.has(id)) {
          g.setAttribute("class", "seat");
          g.dataset.seat = id;
          g.addEventListener("click", () => this.click(id));
        } else {
          g.setAttribute("class", "seat absent");
        }
        svg.append(g);
      }
    }

    this.root.textContent = "";
    this.root.append(svg);
    this.svg = svg;
  }

  private click(id: string): void {
    if (!this.enabled()) return;
    this.pendingSeat = id;
    const cell = this.root.querySelector<SVGElement>(`[data-seat="${id}"]`);
    if (cell) setClass(cell, "pending", true);
    this.send({ type: "seat", id });
  }
}

function spread(n: number, width: number): number[] {
  const xs: number[] = [];
  for (let k = 0; k < n; k++) {
    xs.push(((k + 1) * width) / (n + 1));
  }
  return xs;
}

/* SVG elements lack classList in some DOM implementations; go via the
   class attribute instead. */
function setClass(node: SVGElement, name: string, on: boolean): void {
  const classes = new Set((node.getAttribute("class") ?? "").split(/\s+/)
    .filter(Boolean));
  if (on) classes.add(name);
  else classes.delete(name);
  node.setAttribute("class", [...classes].join(" "));
}
