/**
 * Shared test scaffolding: a hand-driven WebSocket stand-in and snapshot
 * factories whose attribute texts match the engine's tables, so the
 * verbatim-description assertions mean something.
 */

import type { ClientEvent, Snapshot } from "../src/protocol.js";
import type { SocketLike } from "../src/socket.js";

export class FakeSocket implements SocketLike {
  readyState = 0;   // CONNECTING
  sent: string[] = [];
  onopen: ((ev?: unknown) => void) | null = null;
  onclose: ((ev?: unknown) => void) | null = null;
  onerror: ((ev?: unknown) => void) | null = null;
  onmessage: ((ev: { data: unknown }) => void) | null = null;

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.readyState = 3;
  }

  // -- test-side controls --

  open(): void {
    this.readyState = 1;
    this.onopen?.();
  }

  drop(): void {
    this.readyState = 3;
    this.onclose?.();
  }

  receive(msg: unknown): void {
    this.onmessage?.({ data: JSON.stringify(msg) });
  }

  get events(): ClientEvent[] {
    return this.sent.map((s) => JSON.parse(s) as ClientEvent);
  }

  takeEvents(): ClientEvent[] {
    const out = this.events;
    this.sent = [];
    return out;
  }
}

/** Factory that records every socket it hands out. */
export function fakeSockets(): {
  created: FakeSocket[];
  factory: (url: string) => SocketLike;
} {
  const created: FakeSocket[] = [];
  return {
    created,
    factory: () => {
      const sock = new FakeSocket();
      created.push(sock);
      return sock;
    },
  };
}

export const ATTRIBUTES = [
  {
    id: "basic_audio_quality",
    name: "Basic Audio Quality",
    low: "0",
    high: "100",
    description:
      "Global attribute used to judge all detected differences between the "
      + "reference and the object.",
  },
  {
    id: "localizability",
    name: "Localizability",
    low: "More difficult",
    high: "Easier",
    description:
      "Correlates with the perceived spatial extent of a source. "
      + "Localizability is low when spatial extent and location of a sound "
      + "source are difficult to estimate or appear diffuse. It is high if "
      + "a sound source is clearly delimited.",
  },
  {
    id: "spatial_quality",
    name: "Spatial Quality",
    low: "Low Quality",
    high: "High Quality",
    description:
      "A measure of the ability of the item to acoustically describe the "
      + "presented scene with respect to the reference. Takes into account "
      + "all spatial characteristics, e.g., depth, width, spatial "
      + "distribution, reverberation, spatialization, distance, envelopment, "
      + "immersion.",
  },
  {
    id: "timbral_quality",
    name: "Timbral Quality",
    low: "Low Quality",
    high: "High Quality",
    description:
      "How accurately the item maintains the original harmonic content, "
      + "tone color, and spectral balance of the sound with respect to the "
      + "reference.",
  },
];

export const LABELS = ["A", "B", "C", "D"];

export function allCells(): string[] {
  const cells: string[] = [];
  for (const attr of ATTRIBUTES) {
    for (const label of LABELS) cells.push(`${attr.id}/${label}`);
  }
  return cells;
}

export function makeSnapshot(overrides: Partial<Snapshot> = {}): Snapshot {
  return {
    type: "state",
    assessor: "p1",
    phase: "rating",
    trial: 0,
    n_trials: 2,
    labels: [...LABELS],
    reference_label: "ref",
    attributes: ATTRIBUTES.map((a) => ({ ...a })),
    ratings: {
      basic_audio_quality: {},
      localizability: {},
      spatial_quality: {},
      timbral_quality: {},
    },
    missing: allCells(),
    seat: null,
    seats: ["A1", "B2", "C3"],
    sources: 2,
    transport: "stopped",
    stimulus: null,
    ...overrides,
  };
}

/** The processing variant names that must never reach the document. */
export const HIDDEN_CONDITION_IDS = [
  "hidden_reference",
  "lowpass_anchor",
  "non_parametric",
  "parametric",
];

export function assertBlindDom(): void {
  const html = document.documentElement.outerHTML;
  for (const id of HIDDEN_CONDITION_IDS) {
    if (html.includes(id)) {
      throw new Error(`condition identifier ${id} leaked into the DOM`);
    }
  }
}
