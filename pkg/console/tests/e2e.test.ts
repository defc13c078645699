/** End-to-end against a real gateway subprocess: the five console behaviors
 * that matter run through the same client code the page uses. */

import { spawn, type ChildProcess } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { GatewayClient, PushSubscription, type Envelope } from "../src/api.js";
import { renderMapText } from "../src/mapview.js";
import { Transcript } from "../src/transcript.js";

const WAKE = "hello, how may I help you?";
const ZEBRA = "you are approaching a zebra crossing, please be cautious";
const STOP = "stop! obstacle ahead";
const BATTERY_LOW = "battery low, please seek assistance or a power source";

let gateway: ChildProcess;
let client: GatewayClient;

function startGateway(): Promise<string> {
  return new Promise((resolve, reject) => {
    gateway = spawn("python3", ["-m", "transport_assistant.gateway.cli", "serve", "--port", "0"], {
      stdio: ["ignore", "pipe", "pipe"],
    });
    let out = "";
    gateway.stdout!.on("data", (chunk: Buffer) => {
      out += chunk.toString();
      const match = out.match(/listening on (http:\/\/[\d.]+:\d+)/);
      if (match) resolve(match[1]);
    });
    gateway.on("exit", (code) => reject(new Error(`gateway exited early: ${code}`)));
    setTimeout(() => reject(new Error(`gateway never announced a port: ${out}`)), 10_000);
  });
}

async function until<T>(poll: () => Promise<T | undefined>, what: string, ms = 5000): Promise<T> {
  const deadline = Date.now() + ms;
  while (Date.now() < deadline) {
    const value = await poll();
    if (value !== undefined) return value;
    await new Promise((resolve) => setTimeout(resolve, 25));
  }
  throw new Error(`timed out waiting for ${what}`);
}

async function newSession(): Promise<string> {
  const { session_id } = await client.createSession();
  return session_id;
}

/** Pull everything new into the transcript, like one poll loop iteration. */
async function pump(sid: string, transcript: Transcript): Promise<void> {
  const { envelopes } = await client.push(sid, transcript.lastSeq);
  transcript.applyEnvelopes(envelopes);
}

beforeAll(async () => {
  const base = await startGateway();
  client = new GatewayClient(base);
  await client.health();
}, 20_000);

afterAll(() => {
  gateway?.kill();
});

describe("console end to end", () => {
  it("shows the wake greeting as an assistant bubble, via the push channel", async () => {
    const sid = await newSession();
    const transcript = new Transcript();
    const subscription = new PushSubscription(client, sid, (envelopes) => {
      transcript.applyEnvelopes(envelopes);
    });
    const loop = subscription.start(1);

    transcript.addUser("hello assistant");
    await client.utterance(sid, "hello assistant");
    await until(async () => (transcript.assistantTexts().length > 0 ? true : undefined), "wake bubble");
    subscription.stop();
    await loop;

    expect(transcript.entries[0]).toMatchObject({ direction: "UserSaid", text: "hello assistant" });
    expect(transcript.entries[1]).toMatchObject({
      direction: "AssistantSpoke",
      kind: "Reply",
      text: WAKE,
      seq: 1,
    });
  });

  it("surfaces a zebra frame as the exact alert bubble", async () => {
    const sid = await newSession();
    const transcript = new Transcript();
    await client.injectFrame(sid, "zebra_crossing");
    await pump(sid, transcript);
    const alerts = transcript.entries.filter((e) => e.kind === "Alert");
    expect(alerts).toHaveLength(1);
    expect(alerts[0].text).toBe(ZEBRA);
  });

  it("stops on an obstacle dead ahead and visibly replans", async () => {
    const sid = await newSession();
    const transcript = new Transcript();
    const { nav } = await client.startNav(sid, "quad");
    const pathBefore = nav.path.map(([x, y]) => `${x},${y}`);
    const mapBefore = renderMapText(nav);
    const ahead = nav.path[1]; // walker faces along its plan, so this is dead ahead

    await client.injectObstacle(sid, ahead);
    await client.tick(sid, 1);
    await pump(sid, transcript);
    expect(transcript.assistantTexts()).toContain(STOP);

    const state = await client.state(sid);
    const after = state.nav!;
    const pathAfter = after.path.map(([x, y]) => `${x},${y}`);
    expect(pathAfter).not.toEqual(pathBefore);
    expect(pathAfter).not.toContain(`${ahead[0]},${ahead[1]}`);
    expect(after.discovered).toContainEqual(ahead);
    // the redraw is visible: the rendered map changes
    expect(renderMapText(after)).not.toBe(mapBefore);
  });

  it("speaks exactly one battery alert when the level slides across 20%", async () => {
    const sid = await newSession();
    const transcript = new Transcript();
    for (const level of [100, 50, 21, 19, 15]) {
      await client.setBattery(sid, level);
    }
    await pump(sid, transcript);
    const alerts = transcript.assistantTexts().filter((t) => t === BATTERY_LOW);
    expect(alerts).toHaveLength(1);
  });

  it("loses nothing across a reconnect mid-walk", async () => {
    const sid = await newSession();
    const transcript = new Transcript();
    await client.startNav(sid, "quad");
    await client.tick(sid, 3);
    await pump(sid, transcript);
    expect(transcript.assistantTexts().length).toBeGreaterThanOrEqual(3);

    // Connection drops; the walk keeps going while nobody is listening.
    await client.tick(sid, 2);

    // Reconnect resumes from the cursor: nothing lost, nothing duplicated.
    await pump(sid, transcript);
    const fullLog = (await client.push(sid, 0)).envelopes;
    expect(transcript.assistantSeqs()).toEqual(fullLog.map((e: Envelope) => e.seq));
    expect(transcript.assistantTexts()).toEqual(fullLog.map((e: Envelope) => e.text));

    // A cold reload (fresh transcript from zero) sees the same history.
    const reloaded = new Transcript();
    await pump(sid, reloaded);
    expect(reloaded.assistantTexts()).toEqual(transcript.assistantTexts());
  });
});
