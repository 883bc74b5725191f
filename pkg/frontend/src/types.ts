/** JSON shapes exchanged with the study service. Descriptors carry no
 * ground truth; the UI only ever sees media, choices and timing. */

export interface SessionInfo {
  session_id: string;
  subject_id: string;
  seed: number;
  trial_count: number;
  time_limit_s: number;
  status: string;
}

export interface TrialForm {
  object_choices: string[];
  room_choices: string[];
  likert_choices: string[];
}

export interface TrialDescriptor {
  trial_index: number;
  kind: "image" | "video";
  media_url: string;
  time_limit_s: number;
  seconds_remaining: number;
  form: TrialForm;
}

export interface NextTrialResponse {
  done: boolean;
  status: string;
  trial: TrialDescriptor | null;
}

export interface SubmitPayload {
  trial_index: number;
  objects_marked: string[];
  room_choice: string;
  likert: string;
}

export interface SubmitAck {
  trial_index: number;
  late: boolean;
  cursor: number;
  status: string;
}

export interface VideoManifest {
  kind: "video";
  fps: number;
  frame_count: number;
  frames: string[];
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;
