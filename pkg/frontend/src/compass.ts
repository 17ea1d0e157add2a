/**
 * Pose emulation dial: dragging the needle around the compass emits yaw-only
 * quaternion pose messages, so head-tracked rotation can be exercised from a
 * desk without a headset. Zero yaw is the straight-ahead rest pose (needle
 * up); positive angles turn counterclockwise, matching the engine's z-up
 * rotation convention. Messages are throttled while dragging, with a final
 * send on release so the engine always ends on the exact pose shown.
 */

import type { ClientEvent } from "./protocol.js";
import { yawQuaternion } from "./protocol.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const SIZE = 120;
const DEFAULT_THROTTLE_MS = 50;

export class Compass {
  readonly root: HTMLElement;
  yaw = 0;   // radians

  private send: (event: ClientEvent) => void;
  private enabled: () => boolean;
  private throttleMs: number;
  private dragging = false;
  private lastSent = 0;
  private needle: SVGLineElement;
  private readout: HTMLElement;

  constructor(root: HTMLElement, send: (event: ClientEvent) => void,
              enabled: () => boolean = () => true,
              throttleMs: number = DEFAULT_THROTTLE_MS) {
    this.root = root;
    this.send = send;
    this.enabled = enabled;
    this.throttleMs = throttleMs;
    this.root.classList.add("compass");

    const svg = document.createElementNS(SVG_NS, "svg");
    svg.setAttribute("viewBox", `0 0 ${SIZE} ${SIZE}`);
    svg.setAttribute("class", "compass-dial");
    const rim = document.createElementNS(SVG_NS, "circle");
    rim.setAttribute("cx", String(SIZE / 2));
    rim.setAttribute("cy", String(SIZE / 2));
    rim.setAttribute("r", String(SIZE / 2 - 4));
    rim.setAttribute("class", "compass-rim");
    const mark = document.createElementNS(SVG_NS, "text");
    mark.setAttribute("x", String(SIZE / 2));
    mark.setAttribute("y", "14");
    mark.setAttribute("text-anchor", "middle");
    mark.setAttribute("class", "compass-mark");
    mark.textContent = "front";
    this.needle = document.createElementNS(SVG_NS, "line");
    this.needle.setAttribute("x1", String(SIZE / 2));
    this.needle.setAttribute("y1", String(SIZE / 2));
    this.needle.setAttribute("class", "compass-needle");
    svg.append(rim, mark, this.needle);
    this.root.append(svg);

    this.readout = document.createElement("div");
    this.readout.className = "compass-readout";
    this.root.append(this.readout);

    svg.addEventListener("pointerdown", (ev) => {
      if (!this.enabled()) return;
      this.dragging = true;
      (svg as Element & { setPointerCapture?: (id: number) => void })
        .setPointerCapture?.((ev as PointerEvent).pointerId ?? 0);
      this.track(ev as MouseEvent, svg);
    });
    svg.addEventListener("pointermove", (ev) => {
      if (this.dragging) this.track(ev as MouseEvent, svg);
    });
    const finish = () => {
      if (!this.dragging) return;
      this.dragging = false;
      this.sendPose();            // trailing send: final pose always lands
    };
    svg.addEventListener("pointerup", finish);
    svg.addEventListener("pointercancel", finish);

    this.point(0);
  }

  /** Programmatic rotation; used by tests and keyboard handling. */
  setYaw(yawRadians: number): void {
    this.point(yawRadians);
    this.sendPose();
  }

  private track(ev: MouseEvent, svg: SVGSVGElement): void {
    const rect = svg.getBoundingClientRect();
    const cx = rect.left + rect.width / 2;
    const cy = rect.top + rect.height / 2;
    // screen y grows downward; "up" on screen is yaw 0, left is +90deg
    const yaw = Math.atan2(-(ev.clientX - cx), -(ev.clientY - cy));
    this.point(yaw);
    const now = Date.now();
    if (now - this.lastSent >= this.throttleMs) {
      this.sendPose();
    }
  }

  private point(yaw: number): void {
    this.yaw = yaw;
    const r = SIZE / 2 - 10;
    const x2 = SIZE / 2 - r * Math.sin(yaw);
    const y2 = SIZE / 2 - r * Math.cos(yaw);
    this.needle.setAttribute("x2", String(x2));
    this.needle.setAttribute("y2", String(y2));
    const deg = Math.round((yaw * 180) / Math.PI);
    this.readout.textContent = `yaw ${deg}°`;
  }

  private sendPose(): void {
    if (!this.enabled()) return;
    this.lastSent = Date.now();
    this.send({ type: "pose", orientation: yawQuaternion(this.yaw) });
  }
}
