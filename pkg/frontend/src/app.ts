/**
 * Top-level wiring: one WebSocket, one snapshot, many widgets.
 *
 * The app owns the DOM scaffold (header, connection banner, rating panel,
 * seat map, compass, admin pane) and routes every server message to the
 * widgets. All state lives in the engine; the page can be reloaded at any
 * time and rebuilds itself from the first snapshot. While disconnected a
 * banner appears, the controls are disabled, and outgoing events queue in
 * the socket layer; beyond its cap they are dropped and counted here,
 * visibly.
 */

import type { ClientEvent, ErrorReply, ServerMessage, Snapshot } from "./protocol.js";
import { EngineSocket, type ConnectionState, type SocketLike } from "./socket.js";
import { RatingPanel } from "./panel.js";
import { SeatMap } from "./seatmap.js";
import { Compass } from "./compass.js";

export interface AppOptions {
  url: string;
  socketFactory?: (url: string) => SocketLike;
  compassThrottleMs?: number;
}

export class App {
  readonly root: HTMLElement;
  readonly socket: EngineSocket;
  readonly panel: RatingPanel;
  readonly seatMap: SeatMap;
  readonly compass: Compass;
  snapshot: Snapshot | null = null;

  private banner!: HTMLElement;
  private dropNote!: HTMLElement;
  private statusLine!: HTMLElement;
  private connBadge!: HTMLElement;
  private controls!: HTMLFieldSetElement;
  private adminControls!: HTMLFieldSetElement;
  private sourceRow!: HTMLElement;
  private sourceCount = -1;

  constructor(root: HTMLElement, opts: AppOptions) {
    this.root = root;
    this.buildScaffold();

    const send = (event: ClientEvent) => this.socket.send(event);
    const online = () => this.socket.state === "connected";
    this.panel = new RatingPanel(
      this.root.querySelector<HTMLElement>(".panel-slot")!, send);
    this.seatMap = new SeatMap(
      this.root.querySelector<HTMLElement>(".map-slot")!, send, online);
    this.compass = new Compass(
      this.root.querySelector<HTMLElement>(".compass-slot")!, send, online,
      opts.compassThrottleMs);

    this.socket = new EngineSocket(opts.url, {
      onMessage: (msg) => this.onMessage(msg),
      onState: (state) => this.onConnection(state),
      onDrop: (total) => this.onDrop(total),
    }, opts.socketFactory);
  }

  start(): this {
    this.socket.connect();
    return this;
  }

  stop(): void {
    this.socket.close();
  }

  // -- scaffold ---------------------------------------------------------------

  private buildScaffold(): void {
    this.root.textContent = "";
    this.root.classList.add("app");

    const header = document.createElement("header");
    header.className = "app-header";
    const title = document.createElement("h1");
    title.textContent = "auditorium";
    this.connBadge = document.createElement("span");
    this.connBadge.className = "conn-badge";
    header.append(title, this.connBadge);

    this.banner = document.createElement("div");
    this.banner.className = "offline-banner";
    this.banner.textContent = "Connection lost. Retrying…";
    this.banner.hidden = true;

    this.dropNote = document.createElement("div");
    this.dropNote.className = "drop-warning";
    this.dropNote.hidden = true;

    this.statusLine = document.createElement("div");
    this.statusLine.className = "status-line";

    this.controls = document.createElement("fieldset");
    this.controls.className = "controls";
    this.controls.disabled = true;
    const panelSlot = document.createElement("div");
    panelSlot.className = "panel-slot";
    this.controls.append(panelSlot);

    const aside = document.createElement("aside");
    aside.className = "side-column";
    const mapSlot = document.createElement("div");
    mapSlot.className = "map-slot";
    const compassSlot = document.createElement("div");
    compassSlot.className = "compass-slot";
    aside.append(mapSlot, compassSlot, this.buildAdminPane());

    const main = document.createElement("main");
    main.className = "app-main";
    main.append(this.controls, aside);

    this.root.append(header, this.banner, this.dropNote, main, this.statusLine);
  }

  private buildAdminPane(): HTMLElement {
    const pane = document.createElement("details");
    pane.className = "admin-pane";
    const summary = document.createElement("summary");
    summary.textContent = "Administration";
    pane.append(summary);

    this.adminControls = document.createElement("fieldset");
    this.adminControls.className = "admin-controls";
    this.adminControls.disabled = true;

    this.sourceRow = document.createElement("div");
    this.sourceRow.className = "source-row";
    this.adminControls.append(this.sourceRow);

    const next = document.createElement("button");
    next.type = "button";
    next.className = "admin-next";
    next.textContent = "Advance trial";
    next.addEventListener("click", () => this.socket.send({ type: "next" }));
    this.adminControls.append(next);

    const discloseLabel = document.createElement("label");
    discloseLabel.className = "anchor-toggle";
    const disclose = document.createElement("input");
    disclose.type = "checkbox";
    disclose.addEventListener("change", () => {
      this.panel.setAnchorDisclosure(disclose.checked);
    });
    discloseLabel.append(disclose,
                         document.createTextNode(" Disclose anchor to assessor"));
    this.adminControls.append(discloseLabel);

    pane.append(this.adminControls);
    return pane;
  }

  private rebuildSourceRow(sources: number): void {
    this.sourceRow.textContent = "";
    const caption = document.createElement("span");
    caption.textContent = "Sources: ";
    this.sourceRow.append(caption);
    const specs = ["all", ...Array.from({ length: sources }, (_, k) => String(k))];
    for (const spec of specs) {
      const btn = document.createElement("button");
      btn.type = "button";
      btn.className = "source-btn";
      btn.dataset.spec = spec;
      btn.textContent = spec === "all" ? "All" : `S${Number(spec) + 1}`;
      btn.addEventListener("click", () => this.socket.send({ type: "source", spec }));
      this.sourceRow.append(btn);
    }
  }

  // -- message routing ---------------------------------------------------------

  private onMessage(msg: ServerMessage): void {
    if (msg.type === "state") {
      this.snapshot = msg;
      if (msg.sources !== this.sourceCount) {
        this.sourceCount = msg.sources;
        this.rebuildSourceRow(msg.sources);
      }
      this.panel.render(msg);
      this.seatMap.render(msg);
      this.statusLine.textContent =
        `assessor ${msg.assessor} · seat ${msg.seat ?? "none"}`;
    } else if (msg.type === "error") {
      this.onError(msg);
    }
    // notify messages carry no state the snapshot lacks; ignored
  }

  private onError(msg: ErrorReply): void {
    if (msg.missing && msg.missing.length > 0) {
      this.panel.showMissing(msg.missing);
    } else {
      this.panel.dropPending();
    }
    this.statusLine.textContent = `refused: ${msg.message}`;
  }

  private onConnection(state: ConnectionState): void {
    const online = state === "connected";
    this.banner.hidden = online;
    this.controls.disabled = !online;
    this.adminControls.disabled = !online;
    this.root.classList.toggle("offline", !online);
    this.connBadge.textContent = state;
    this.connBadge.className = `conn-badge ${state}`;
    if (online && this.socket.dropped === 0) this.dropNote.hidden = true;
  }

  private onDrop(total: number): void {
    this.dropNote.textContent =
      `${total} interaction${total === 1 ? "" : "s"} dropped while offline`;
    this.dropNote.hidden = false;
  }
}
