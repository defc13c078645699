/** Typed client for the assistant gateway. No domain logic lives here: the
 * console displays whatever the push channel says, byte for byte. */

export type SpeechKind = "Reply" | "Alert" | "NavInstruction" | "Message";

export interface Envelope {
  seq: number;
  session_id: string;
  kind: SpeechKind;
  text: string;
  emitted_at: number;
}

export interface NavView {
  map: {
    width: number;
    height: number;
    blocked: [number, number][];
    places: Record<string, [number, number]>;
  };
  destination_place: string;
  goal: [number, number];
  walker: { cell: [number, number]; heading: string };
  path: [number, number][];
  discovered: [number, number][];
  dynamic_blocked: [number, number][];
  done: boolean;
}

export interface RideView {
  ride_id: string;
  session_id: string;
  state: string;
  pickup: [number, number];
  destination_place: string;
  driver_id: string | null;
  eta_seconds: number | null;
  driver_name: string | null;
  driver_position: [number, number] | null;
}

export interface StateView {
  session_id: string;
  state: string;
  position: [number, number];
  battery: { level_percent: number; below_threshold: boolean } | null;
  context: Record<string, unknown>;
  last_seq: number;
  nav: NavView | null;
  rides: RideView[];
}

export class GatewayError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "GatewayError";
  }
}

async function asError(response: Response): Promise<GatewayError> {
  let message = response.statusText;
  try {
    const body = await response.json();
    if (typeof body.error === "string") message = body.error;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new GatewayError(response.status, message);
}

export class GatewayClient {
  /** base is "" when the console is served by the gateway itself. */
  constructor(readonly base: string = "") {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await fetch(`${this.base}${path}`, init);
    if (!response.ok) throw await asError(response);
    return (await response.json()) as T;
  }

  health(): Promise<{ ok: boolean }> {
    return this.request("GET", "/api/health");
  }

  createSession(): Promise<{ session_id: string; position: [number, number] }> {
    return this.request("POST", "/api/session");
  }

  utterance(sid: string, text: string): Promise<{ events: Envelope[] }> {
    return this.request("POST", `/api/session/${sid}/utterance`, { text });
  }

  injectFrame(sid: string, contentKey: string): Promise<{ events: Envelope[] }> {
    return this.request("POST", `/api/session/${sid}/frames`, { content_key: contentKey });
  }

  setBattery(
    sid: string,
    level: number,
  ): Promise<{ events: Envelope[]; battery: { level_percent: number } }> {
    return this.request("POST", `/api/session/${sid}/battery`, { level });
  }

  startNav(sid: string, destination: string): Promise<{ nav: NavView; events: Envelope[] }> {
    return this.request("POST", `/api/session/${sid}/nav/start`, { destination });
  }

  injectObstacle(sid: string, cell: [number, number]): Promise<{ nav: NavView }> {
    return this.request("POST", `/api/session/${sid}/nav/obstacle`, { cell });
  }

  tick(sid: string, steps = 1): Promise<{ events: Envelope[] }> {
    return this.request("POST", `/api/session/${sid}/nav/tick`, { steps });
  }

  cancelRide(sid: string, rideId: string): Promise<{ ride: RideView; events: Envelope[] }> {
    return this.request("POST", `/api/session/${sid}/ride/${rideId}/cancel`);
  }

  state(sid: string): Promise<StateView> {
    return this.request("GET", `/api/session/${sid}/state`);
  }

  /** Long-poll the push channel: everything newer than `after`, waiting up to
   * `waitS` seconds for the first new envelope. */
  push(sid: string, after: number, waitS = 0): Promise<{ envelopes: Envelope[] }> {
    const query = waitS > 0 ? `?after=${after}&wait=${waitS}` : `?after=${after}`;
    return this.request("GET", `/api/session/${sid}/push${query}`);
  }
}

/** Resumable push subscription. Remembers the last sequence number it has
 * delivered, so stop()/start cycles (or a page reload handed the old cursor)
 * never lose or duplicate envelopes. */
export class PushSubscription {
  cursor: number;
  private running = false;

  constructor(
    private readonly client: GatewayClient,
    private readonly sid: string,
    private readonly onEnvelopes: (envelopes: Envelope[]) => void,
    private readonly onError: (error: unknown) => void = () => {},
    startAfter = 0,
  ) {
    this.cursor = startAfter;
  }

  async start(waitS = 25): Promise<void> {
    this.running = true;
    while (this.running) {
      try {
        const { envelopes } = await this.client.push(this.sid, this.cursor, waitS);
        if (!this.running) return;
        const fresh = envelopes.filter((e) => e.seq > this.cursor);
        if (fresh.length > 0) {
          this.cursor = fresh[fresh.length - 1].seq;
          this.onEnvelopes(fresh);
        } else if (waitS <= 0) {
          // without server-side long-polling an empty poll must not busy-spin
          await new Promise((resolve) => setTimeout(resolve, 50));
        }
      } catch (error) {
        if (!this.running) return;
        this.onError(error);
        await new Promise((resolve) => setTimeout(resolve, 1000));
      }
    }
  }

  stop(): void {
    this.running = false;
  }
}
