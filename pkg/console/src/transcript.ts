/** Transcript model: the user's own bubbles appear optimistically, assistant
 * bubbles only from push envelopes, in sequence order, deduplicated by seq. */

import type { Envelope, SpeechKind } from "./api.js";

export type Direction = "UserSaid" | "AssistantSpoke";

export interface TranscriptEntry {
  direction: Direction;
  text: string;
  kind: SpeechKind | "Utterance";
  seq: number | null; // null for the user's own bubbles
}

export class Transcript {
  readonly entries: TranscriptEntry[] = [];
  lastSeq = 0;

  addUser(text: string): TranscriptEntry {
    const entry: TranscriptEntry = {
      direction: "UserSaid",
      text,
      kind: "Utterance",
      seq: null,
    };
    this.entries.push(entry);
    return entry;
  }

  /** Append assistant envelopes. Anything at or below lastSeq was already
   * shown (a reconnect replays history), so it is dropped; the rest is
   * appended in sequence order. Returns what was actually added. */
  applyEnvelopes(envelopes: Envelope[]): TranscriptEntry[] {
    const fresh = envelopes
      .filter((e) => e.seq > this.lastSeq)
      .sort((a, b) => a.seq - b.seq);
    const added: TranscriptEntry[] = [];
    for (const envelope of fresh) {
      const entry: TranscriptEntry = {
        direction: "AssistantSpoke",
        text: envelope.text,
        kind: envelope.kind,
        seq: envelope.seq,
      };
      this.entries.push(entry);
      this.lastSeq = envelope.seq;
      added.push(entry);
    }
    return added;
  }

  assistantTexts(): string[] {
    return this.entries
      .filter((e) => e.direction === "AssistantSpoke")
      .map((e) => e.text);
  }

  /** Sequence numbers of every assistant entry, for loss/duplication checks. */
  assistantSeqs(): number[] {
    return this.entries
      .filter((e): e is TranscriptEntry & { seq: number } => e.seq !== null)
      .map((e) => e.seq);
  }
}
