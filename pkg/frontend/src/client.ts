/** Session client: one socket, one lesson, strictly ordered replies.
 *
 * The service answers every message exactly once and in order, so the
 * client keeps a FIFO of outstanding requests and can pipeline the 90 Hz
 * frame stream without waiting on each reply. Every reply also feeds the
 * view model, whether or not anyone is awaiting it.
 */

import type { Calibration, LineSpec, ServerMessage } from "./protocol.js";
import * as protocol from "./protocol.js";
import type { ControlState } from "./torch.js";
import { benchBasis, defaultLine, FRAME_RATE, gridToWorld, TorchSynth } from "./torch.js";
import type { BoothModel } from "./widgets.js";
import { initialModel, reduce, setGuide, setPaused } from "./widgets.js";

/** The transport surface the client needs; browser WebSocket and node ws both adapt to it. */
export interface BoothSocket {
  send(data: string): void;
  close(): void;
  onMessage(handler: (data: string) => void): void;
  onClose(handler: () => void): void;
}

export type SocketFactory = () => Promise<BoothSocket>;

export interface SessionIdentity {
  participant: string;
  sequence: string;
  condition: string;
}

interface PendingReply {
  resolve: (msg: ServerMessage) => void;
  reject: (err: unknown) => void;
}

export class BoothClient {
  private socket: BoothSocket | null = null;
  private pending: PendingReply[] = [];
  private synth: TorchSynth | null = null;
  private calibration: Calibration | null = null;
  private closing = false;
  private listeners: Array<(model: BoothModel) => void> = [];
  model: BoothModel = initialModel();

  constructor(
    private readonly connectSocket: SocketFactory,
    private readonly identity: SessionIdentity,
  ) {}

  onChange(listener: (model: BoothModel) => void): void {
    this.listeners.push(listener);
  }

  private setModel(model: BoothModel): void {
    this.model = model;
    for (const listener of this.listeners) listener(model);
  }

  private handleText(text: string): void {
    let msg: ServerMessage;
    try {
      msg = protocol.parseServerMessage(text);
    } catch (err) {
      // A reply we cannot read still consumes its slot in the FIFO;
      // failing the waiter beats hanging it forever.
      this.pending.shift()?.reject(err);
      return;
    }
    if (msg.type === "recalibrated") this.adoptCalibration(msg.calibration);
    this.setModel(reduce(this.model, msg));
    this.pending.shift()?.resolve(msg);
  }

  private adoptCalibration(calibration: Calibration): void {
    this.calibration = calibration;
    const old = this.synth;
    this.synth = old
      ? new TorchSynth(calibration, FRAME_RATE, old.timestamp, old.frameIndex)
      : new TorchSynth(calibration);
  }

  private request(text: string): Promise<ServerMessage> {
    const socket = this.socket;
    if (!socket) return Promise.reject(new Error("not connected"));
    return new Promise((resolve, reject) => {
      this.pending.push({ resolve, reject });
      try {
        socket.send(text);
      } catch (e) {
        this.pending.pop();
        reject(e);
      }
    });
  }

  /** Open the socket and run the handshake; resolves on welcome. */
  async connect(): Promise<ServerMessage> {
    this.closing = false;
    const socket = await this.connectSocket();
    socket.onMessage((data) => this.handleText(data));
    socket.onClose(() => {
      this.socket = null;
      const waiters = this.pending;
      this.pending = [];
      for (const waiter of waiters) waiter.reject(new Error("connection lost"));
      // A clean bye already moved the model to "closed"; anything else
      // is a drop, and the engine has checkpointed server-side.
      if (!this.closing && this.model.phase !== "closed") {
        this.setModel(setPaused(this.model, true));
      }
    });
    this.socket = socket;
    const { participant, sequence, condition } = this.identity;
    const reply = await this.request(protocol.hello(participant, sequence, condition));
    if (reply.type === "welcome") {
      this.adoptCalibration(reply.calibration);
      this.setModel(setPaused(this.model, false));
    }
    return reply;
  }

  get connected(): boolean {
    return this.socket !== null;
  }

  /** Begin the next lesson line; the booth always names its line explicitly. */
  async startLine(lengthIn = 5): Promise<ServerMessage> {
    if (!this.calibration) throw new Error("no calibration yet; connect first");
    const spec: LineSpec = defaultLine(this.calibration, lengthIn);
    const reply = await this.request(protocol.startLine(spec));
    if (reply.type === "line_started") this.setModel(setGuide(this.model, spec));
    return reply;
  }

  /** Synthesize one frame from the held controls and stream it. */
  sendFrame(controls: ControlState): Promise<ServerMessage> {
    if (!this.synth) return Promise.reject(new Error("no calibration yet; connect first"));
    return this.request(protocol.frameMessage(this.synth.frame(controls)));
  }

  endLine(): Promise<ServerMessage> {
    return this.request(protocol.endLine());
  }

  setAssist(assisted: boolean | null): Promise<ServerMessage> {
    return this.request(protocol.setAssist(assisted));
  }

  /** Tap the tip on a known grid point (the glowing dot) to recalibrate. */
  tapAt(u: number, v: number, controls: ControlState): Promise<ServerMessage> {
    if (!this.synth || !this.calibration) {
      return Promise.reject(new Error("no calibration yet; connect first"));
    }
    const frame = this.synth.frame({ ...controls, u, v, ctwdMm: 0, triggerDown: false });
    const point = gridToWorld(benchBasis(this.calibration), u, v, 0);
    return this.request(protocol.tap(frame, [...point] as [number, number, number]));
  }

  async bye(): Promise<ServerMessage> {
    this.closing = true;
    const reply = await this.request(protocol.bye());
    this.socket?.close();
    this.socket = null;
    return reply;
  }

  /** After a drop: reconnect and greet again (a fresh engine session). */
  async reconnect(): Promise<ServerMessage> {
    this.setModel({ ...initialModel(), paused: true });
    return this.connect();
  }
}

/** Adapt a browser WebSocket to BoothSocket. */
export function browserSocket(url: string): SocketFactory {
  return () =>
    new Promise((resolve, reject) => {
      const ws = new WebSocket(url);
      ws.onopen = () =>
        resolve({
          send: (data) => ws.send(data),
          close: () => ws.close(),
          onMessage: (handler) => {
            ws.onmessage = (ev) => handler(String(ev.data));
          },
          onClose: (handler) => {
            ws.onclose = () => handler();
          },
        });
      ws.onerror = () => reject(new Error(`could not connect to ${url}`));
    });
}
