import { describe, expect, it } from "vitest";

import { App } from "../src/app.js";
import { QUEUE_LIMIT } from "../src/socket.js";
import { assertBlindDom, fakeSockets, makeSnapshot, type FakeSocket } from "./helpers.js";

let root: HTMLElement;

function build(): { app: App; created: FakeSocket[] } {
  document.body.innerHTML = "";
  root = document.createElement("div");
  document.body.append(root);
  const { created, factory } = fakeSockets();
  const app = new App(root, { url: "ws://test/ws", socketFactory: factory,
                              compassThrottleMs: 0 });
  app.start();
  return { app, created: created as FakeSocket[] };
}

function connect(created: FakeSocket[]): FakeSocket {
  const sock = created[created.length - 1]!;
  sock.open();
  sock.receive(makeSnapshot());
  return sock;
}

describe("connection surface", () => {
  it("starts disabled behind the banner until the first snapshot", () => {
    const { created } = build();
    const banner = root.querySelector<HTMLElement>(".offline-banner")!;
    const controls = root.querySelector<HTMLFieldSetElement>(".controls")!;
    expect(banner.hidden).toBe(false);
    expect(controls.disabled).toBe(true);

    connect(created);
    expect(banner.hidden).toBe(true);
    expect(controls.disabled).toBe(false);
    expect(root.querySelectorAll(".cell-slider")).toHaveLength(4);
    assertBlindDom();
  });

  it("drops back to the banner when the socket dies", () => {
    const { created } = build();
    const sock = connect(created);
    sock.drop();
    expect(root.querySelector<HTMLElement>(".offline-banner")!.hidden).toBe(false);
    expect(root.querySelector<HTMLFieldSetElement>(".controls")!.disabled)
      .toBe(true);
    expect(root.classList.contains("offline")).toBe(true);
  });

  it("shows a visible warning once offline events start dropping", () => {
    const { app, created } = build();
    connect(created);
    created[0]!.drop();
    for (let i = 0; i <= QUEUE_LIMIT; i++) app.socket.send({ type: "stop" });
    const note = root.querySelector<HTMLElement>(".drop-warning")!;
    expect(note.hidden).toBe(false);
    expect(note.textContent).toContain("1 interaction");
  });
});

describe("message routing", () => {
  it("renders panel, map and status from one snapshot", () => {
    const { created } = build();
    const sock = created[0]!;
    sock.open();
    sock.receive(makeSnapshot({ seat: "C3", phase: "rating" }));
    expect(root.querySelector(".status-line")!.textContent)
      .toContain("seat C3");
    expect(root.querySelector('[data-seat="C3"]')!.getAttribute("class"))
      .toContain("selected");
  });

  it("routes refusals with missing lists into cell highlights", () => {
    const { created } = build();
    const sock = connect(created);
    sock.receive({ type: "error", error: "Incomplete",
                   message: "3 cells unrated",
                   missing: ["timbral_quality/A"] });
    const tabs = [...root.querySelectorAll<HTMLButtonElement>(".attr-tab")];
    tabs[3]!.click();
    expect(root.querySelector('[data-cell="timbral_quality/A"]')!
      .classList.contains("missing")).toBe(true);
    expect(root.querySelector(".status-line")!.textContent)
      .toContain("3 cells unrated");
  });

  it("plain refusals reset optimistic slider state", () => {
    const { created } = build();
    const sock = connect(created);
    const slider = root.querySelector<HTMLInputElement>(".cell-slider")!;
    slider.value = "77";
    slider.dispatchEvent(new Event("change", { bubbles: true }));
    expect(slider.value).toBe("77");
    sock.receive({ type: "error", error: "WrongPhase", message: "not now" });
    expect(slider.value).toBe("50");
  });
});

describe("admin pane", () => {
  it("offers source selection sized to the dataset", () => {
    const { created } = build();
    const sock = connect(created);
    const buttons = [...root.querySelectorAll<HTMLButtonElement>(".source-btn")];
    expect(buttons.map((b) => b.textContent)).toEqual(["All", "S1", "S2"]);
    buttons[2]!.click();
    expect(sock.events.at(-1)).toEqual({ type: "source", spec: "1" });
  });

  it("advances trials and toggles anchor disclosure", () => {
    const { created } = build();
    const sock = connect(created);
    root.querySelector<HTMLButtonElement>(".admin-next")!.click();
    expect(sock.events.at(-1)).toEqual({ type: "next" });

    const toggle = root.querySelector<HTMLInputElement>(".anchor-toggle input")!;
    toggle.checked = true;
    toggle.dispatchEvent(new Event("change", { bubbles: true }));
    expect(root.querySelector<HTMLElement>(".anchor-note")!.hidden).toBe(false);
    assertBlindDom();
  });
});

describe("reload recovery", () => {
  it("a fresh app rebuilds every slider from the first snapshot", () => {
    const ratings = {
      basic_audio_quality: { A: 11, B: 22, C: 33, D: 44 },
      localizability: { A: 55 },
      spatial_quality: {},
      timbral_quality: { D: 99 },
    };
    const first = build();
    connect(first.created);
    first.app.stop();

    // simulate the reload: new DOM, new app, same engine state
    const second = build();
    const sock = second.created[0]!;
    sock.open();
    sock.receive(makeSnapshot({ ratings }));

    expect(root.querySelector<HTMLInputElement>(
      '[data-cell="basic_audio_quality/C"] .cell-slider')!.value).toBe("33");
    const tabs = [...root.querySelectorAll<HTMLButtonElement>(".attr-tab")];
    tabs[3]!.click();
    expect(root.querySelector<HTMLInputElement>(
      '[data-cell="timbral_quality/D"] .cell-slider')!.value).toBe("99");
    tabs[2]!.click();
    expect(root.querySelector('[data-cell="spatial_quality/A"]')!
      .classList.contains("untouched")).toBe(true);
  });
});
