/** Display names for the canonical choice ids served by the protocol.
 * Unknown ids fall back to themselves so the UI never blocks on a new id. */

const OBJECT_LABELS: Record<string, string> = {
  sink: "sink",
  refrigerator: "refrigerator",
  oven_microwave: "oven / microwave",
  table: "table",
  chair: "chair",
  tv_laptop: "TV / laptop",
  bed: "bed",
  couch: "couch",
};

const ROOM_LABELS: Record<string, string> = {
  bedroom: "bedroom",
  kitchen: "kitchen",
  dining_room: "dining room",
  living_room: "living room",
};

const LIKERT_LABELS: Record<string, string> = {
  DY: "definitely yes",
  PY: "probably yes",
  M: "maybe",
  PN: "probably no",
  DN: "definitely no",
};

export const objectLabel = (id: string): string => OBJECT_LABELS[id] ?? id;
export const roomLabel = (id: string): string => ROOM_LABELS[id] ?? id;
export const likertLabel = (id: string): string => LIKERT_LABELS[id] ?? id;
