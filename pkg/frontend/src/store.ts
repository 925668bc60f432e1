// Client-side mirror of one (annotator, class) naming with optimistic edits.
//
// Every user action is validated and applied locally first (the op engine
// mirrors the server's semantics), rendered immediately, and sent as a
// fine-grained op. The server's response document becomes the new
// acknowledged state; on 409/422 the local state reverts and the server
// copy is reloaded. Undo keeps snapshots of acknowledged documents and
// restores them through full-document PUT, which makes it an exact
// inverse on the naming content.

import { NamingApi, ValidationError, VersionConflictError } from "./api.js";
import type { ActivationRef, NamingDoc, Op } from "./types.js";
import { compareRefs, normalizeNaming, refKey } from "./types.js";

export class LocalOpError extends Error {
  constructor(message: string, readonly violations: string[] = [message]) {
    super(message);
  }
}

export function namingViolations(doc: NamingDoc): string[] {
  const violations: string[] = [];
  const seenConcepts = new Set<string>();
  const memberOwner = new Map<string, string>();
  for (const concept of doc.concepts) {
    if (seenConcepts.has(concept.concept_id)) {
      violations.push(`duplicate concept_id '${concept.concept_id}'`);
    }
    seenConcepts.add(concept.concept_id);
    const local = new Set<string>();
    for (const ref of concept.members) {
      const key = refKey(ref);
      if (local.has(key)) {
        violations.push(`repeated member in concept '${concept.concept_id}'`);
        continue;
      }
      local.add(key);
      const owner = memberOwner.get(key);
      if (owner !== undefined) {
        violations.push(
          `activation (${ref.image_id}, ${ref.feature_id}) is in concepts ` +
            `'${owner}' and '${concept.concept_id}'`,
        );
      } else {
        memberOwner.set(key, concept.concept_id);
      }
    }
  }
  for (const ref of doc.discarded) {
    const owner = memberOwner.get(refKey(ref));
    if (owner !== undefined) {
      violations.push(
        `activation (${ref.image_id}, ${ref.feature_id}) is both discarded ` +
          `and in concept '${owner}'`,
      );
    }
  }
  return violations;
}

function nextConceptId(doc: NamingDoc): string {
  let highest = 0;
  for (const concept of doc.concepts) {
    const match = /^c(\d+)$/.exec(concept.concept_id);
    if (match) highest = Math.max(highest, Number(match[1]));
  }
  return `c${highest + 1}`;
}

function withoutMembers(doc: NamingDoc, keys: Set<string>): NamingDoc {
  return {
    ...doc,
    concepts: doc.concepts.map((c) => ({
      ...c,
      members: c.members.filter((r) => !keys.has(refKey(r))),
    })),
  };
}

function requireMembers(members: ActivationRef[] | undefined): ActivationRef[] {
  if (!members || members.length === 0) {
    throw new LocalOpError("select at least one activation");
  }
  return members;
}

function rejectDiscarded(doc: NamingDoc, members: ActivationRef[]): void {
  const discarded = new Set(doc.discarded.map(refKey));
  const blocked = members.filter((r) => discarded.has(refKey(r)));
  if (blocked.length > 0) {
    throw new LocalOpError(
      "selection includes discarded activations; restore them first",
      blocked.map((r) => `discarded: (${r.image_id}, ${r.feature_id})`),
    );
  }
}

/** Pure op application, mirroring the service's semantics. */
export function applyOpLocal(doc: NamingDoc, op: Op): NamingDoc {
  switch (op.type) {
    case "create_concept": {
      const members = requireMembers(op.members);
      rejectDiscarded(doc, members);
      const conceptId = op.concept_id ?? nextConceptId(doc);
      if (doc.concepts.some((c) => c.concept_id === conceptId)) {
        throw new LocalOpError(`concept '${conceptId}' already exists`);
      }
      const keys = new Set(members.map(refKey));
      const cleared = withoutMembers(doc, keys);
      return {
        ...cleared,
        concepts: [
          ...cleared.concepts,
          { concept_id: conceptId, name: op.name ?? "", members: [...members].sort(compareRefs) },
        ],
      };
    }
    case "rename": {
      if (!doc.concepts.some((c) => c.concept_id === op.concept_id)) {
        throw new LocalOpError(`no concept '${op.concept_id}'`);
      }
      return {
        ...doc,
        concepts: doc.concepts.map((c) =>
          c.concept_id === op.concept_id ? { ...c, name: op.name } : c,
        ),
      };
    }
    case "move_members": {
      const members = requireMembers(op.members);
      rejectDiscarded(doc, members);
      if (op.to !== null && !doc.concepts.some((c) => c.concept_id === op.to)) {
        throw new LocalOpError(`no concept '${op.to}'`);
      }
      const keys = new Set(members.map(refKey));
      const cleared = withoutMembers(doc, keys);
      if (op.to === null) return cleared;
      return {
        ...cleared,
        concepts: cleared.concepts.map((c) =>
          c.concept_id === op.to
            ? { ...c, members: [...c.members, ...members].sort(compareRefs) }
            : c,
        ),
      };
    }
    case "merge": {
      if (op.source === op.into) {
        throw new LocalOpError("cannot merge a concept into itself");
      }
      const source = doc.concepts.find((c) => c.concept_id === op.source);
      const into = doc.concepts.find((c) => c.concept_id === op.into);
      if (!source || !into) {
        throw new LocalOpError(`merge needs existing concepts, got '${op.source}' -> '${op.into}'`);
      }
      return {
        ...doc,
        concepts: doc.concepts
          .filter((c) => c.concept_id !== op.source)
          .map((c) =>
            c.concept_id === op.into
              ? { ...c, members: [...c.members, ...source.members].sort(compareRefs) }
              : c,
          ),
      };
    }
    case "discard": {
      const members = requireMembers(op.members);
      const keys = new Set(members.map(refKey));
      const cleared = withoutMembers(doc, keys);
      const existing = new Set(doc.discarded.map(refKey));
      const added = members.filter((r) => !existing.has(refKey(r)));
      return {
        ...cleared,
        discarded: [...cleared.discarded, ...added].sort(compareRefs),
      };
    }
    case "restore": {
      const members = requireMembers(op.members);
      const discarded = new Set(doc.discarded.map(refKey));
      const missing = members.filter((r) => !discarded.has(refKey(r)));
      if (missing.length > 0) {
        throw new LocalOpError(
          "restore targets must be discarded",
          missing.map((r) => `not discarded: (${r.image_id}, ${r.feature_id})`),
        );
      }
      const keys = new Set(members.map(refKey));
      return {
        ...doc,
        discarded: doc.discarded.filter((r) => !keys.has(refKey(r))),
      };
    }
  }
}

export interface SessionEvents {
  /** State changed (optimistic apply, server reconcile, revert, undo). */
  onChange?: () => void;
  /** A server rejection or transport failure the user should see. */
  onError?: (message: string) => void;
}

export interface SessionOptions {
  undoDepth?: number;
  events?: SessionEvents;
}

const DEFAULT_UNDO_DEPTH = 50;

export class NamingSession {
  naming: NamingDoc;
  private acknowledged: NamingDoc;
  private readonly undoStack: NamingDoc[] = [];
  private readonly undoDepth: number;
  private readonly events: SessionEvents;
  private chain: Promise<void> = Promise.resolve();

  constructor(
    private readonly api: NamingApi,
    readonly annotatorId: string,
    readonly classId: string,
    options: SessionOptions = {},
  ) {
    this.undoDepth = options.undoDepth ?? DEFAULT_UNDO_DEPTH;
    this.events = options.events ?? {};
    this.naming = this.acknowledged = {
      annotator_id: annotatorId,
      class_id: classId,
      version: 0,
      concepts: [],
      discarded: [],
    };
  }

  get version(): number {
    return this.acknowledged.version;
  }

  canUndo(): boolean {
    return this.undoStack.length > 0;
  }

  async load(): Promise<void> {
    const doc = await this.api.getNaming(this.annotatorId, this.classId);
    this.acknowledged = normalizeNaming(doc);
    this.naming = this.acknowledged;
    this.events.onChange?.();
  }

  /**
   * Validate + apply locally, then send the op. Resolves true when the
   * server accepted it; on rejection the local state reverts, the server
   * copy reloads, and the result is false. Ops are serialized so rapid
   * UI actions cannot race their base versions.
   */
  apply(op: Op): Promise<boolean> {
    const run = this.chain.then(() => this.applyNow(op));
    this.chain = run.then(() => undefined, () => undefined);
    return run;
  }

  undo(): Promise<boolean> {
    const run = this.chain.then(() => this.undoNow());
    this.chain = run.then(() => undefined, () => undefined);
    return run;
  }

  private async applyNow(op: Op): Promise<boolean> {
    let predicted: NamingDoc;
    try {
      predicted = normalizeNaming(applyOpLocal(this.acknowledged, op));
      const violations = namingViolations(predicted);
      if (violations.length > 0) throw new LocalOpError("invalid edit", violations);
    } catch (error) {
      if (error instanceof LocalOpError) {
        this.events.onError?.(error.violations.join("; "));
        return false;
      }
      throw error;
    }

    const before = this.acknowledged;
    this.naming = predicted; // optimistic
    this.events.onChange?.();
    try {
      const stored = await this.api.postOp(
        this.annotatorId,
        this.classId,
        before.version,
        op,
      );
      this.pushUndo(before);
      this.acknowledged = normalizeNaming(stored);
      this.naming = this.acknowledged;
      this.events.onChange?.();
      return true;
    } catch (error) {
      await this.revertAndReload(error);
      return false;
    }
  }

  private async undoNow(): Promise<boolean> {
    const snapshot = this.undoStack.pop();
    if (!snapshot) return false;
    const restored = { ...snapshot, version: this.acknowledged.version };
    this.naming = restored; // optimistic
    this.events.onChange?.();
    try {
      const version = await this.api.putNaming(restored);
      this.acknowledged = normalizeNaming({ ...restored, version });
      this.naming = this.acknowledged;
      this.events.onChange?.();
      return true;
    } catch (error) {
      await this.revertAndReload(error);
      return false;
    }
  }

  private pushUndo(doc: NamingDoc): void {
    this.undoStack.push(doc);
    if (this.undoStack.length > this.undoDepth) this.undoStack.shift();
  }

  private async revertAndReload(error: unknown): Promise<void> {
    this.naming = this.acknowledged; // revert the optimistic copy
    this.events.onChange?.();
    if (error instanceof VersionConflictError) {
      this.events.onError?.(
        `someone else updated this naming (server at v${error.currentVersion}); reloaded`,
      );
    } else if (error instanceof ValidationError) {
      this.events.onError?.(error.violations.join("; "));
    } else {
      this.events.onError?.(error instanceof Error ? error.message : String(error));
      return; // transport failure: keep local state, caller may retry
    }
    try {
      await this.load();
    } catch {
      // server unreachable; acknowledged state stays current
    }
  }
}
