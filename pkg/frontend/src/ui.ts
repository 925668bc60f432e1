// DOM view: an unlabeled-activations grid with multi-select, concept cards,
// and the action bar. All mutations flow through NamingSession; the view
// re-renders from state on every change, so optimistic updates and server
// reverts both show up immediately.

import { NamingApi } from "./api.js";
import { NamingSession } from "./store.js";
import type { ActivationEntry, ActivationRef, CoverageStats } from "./types.js";
import { refKey } from "./types.js";

export interface ViewOptions {
  api: NamingApi;
  annotatorId: string;
  classId: string;
  undoDepth?: number;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function percent(x: number): string {
  return `${(x * 100).toFixed(1)}%`;
}

export class NamingView {
  readonly session: NamingSession;
  private activations: ActivationEntry[] = [];
  private stats: CoverageStats | null = null;
  private readonly selection = new Set<string>();
  private lastError: string | null = null;
  private loadFailed = false;

  constructor(
    private readonly root: HTMLElement,
    private readonly options: ViewOptions,
  ) {
    this.session = new NamingSession(options.api, options.annotatorId, options.classId, {
      undoDepth: options.undoDepth,
      events: {
        onChange: () => this.render(),
        onError: (message) => {
          this.lastError = message;
          this.render();
        },
      },
    });
    if (typeof window !== "undefined") {
      window.addEventListener("focus", () => void this.refresh());
    }
  }

  async start(): Promise<void> {
    this.loadFailed = false;
    try {
      await this.session.load();
      await this.refresh();
    } catch (error) {
      this.loadFailed = true;
      this.lastError = error instanceof Error ? error.message : String(error);
      this.render();
    }
  }

  /** Refetch the activation listing and the live coverage stats. */
  async refresh(): Promise<void> {
    try {
      this.activations = await this.options.api.activations(
        this.options.classId,
        this.options.annotatorId,
      );
      this.stats = await this.options.api.stats(
        this.options.annotatorId,
        this.options.classId,
      );
    } catch (error) {
      this.lastError = error instanceof Error ? error.message : String(error);
    }
    this.render();
  }

  selectedRefs(): ActivationRef[] {
    return this.activations
      .filter((a) => this.selection.has(this.entryKey(a)))
      .map((a) => ({
        image_id: a.image_id,
        class_id: a.class_id,
        feature_id: a.feature_id,
      }));
  }

  private entryKey(entry: ActivationEntry): string {
    return refKey({
      image_id: entry.image_id,
      class_id: entry.class_id,
      feature_id: entry.feature_id,
    });
  }

  private async act(action: () => Promise<boolean>): Promise<void> {
    this.lastError = null;
    const accepted = await action();
    if (accepted) this.selection.clear();
    await this.refresh();
  }

  // --- actions -------------------------------------------------------------

  createConcept(name: string): Promise<void> {
    return this.act(() =>
      this.session.apply({ type: "create_concept", name, members: this.selectedRefs() }),
    );
  }

  moveSelectionTo(conceptId: string | null): Promise<void> {
    return this.act(() =>
      this.session.apply({ type: "move_members", members: this.selectedRefs(), to: conceptId }),
    );
  }

  mergeConcepts(source: string, into: string): Promise<void> {
    return this.act(() => this.session.apply({ type: "merge", source, into }));
  }

  renameConcept(conceptId: string, name: string): Promise<void> {
    return this.act(() => this.session.apply({ type: "rename", concept_id: conceptId, name }));
  }

  discardSelection(): Promise<void> {
    return this.act(() => this.session.apply({ type: "discard", members: this.selectedRefs() }));
  }

  restoreSelection(): Promise<void> {
    return this.act(() => this.session.apply({ type: "restore", members: this.selectedRefs() }));
  }

  undo(): Promise<void> {
    return this.act(() => this.session.undo());
  }

  // --- rendering -----------------------------------------------------------

  private thumb(entry: ActivationEntry): HTMLElement {
    const key = this.entryKey(entry);
    const cell = el("div", "thumb");
    cell.dataset.key = key;
    if (this.selection.has(key)) cell.classList.add("selected");
    if (entry.heatmap_url) {
      const img = el("img");
      img.src = entry.heatmap_url;
      img.alt = `${entry.image_id} feature ${entry.feature_id}`;
      cell.appendChild(img);
    } else {
      cell.appendChild(el("div", "thumb-placeholder", `f${entry.feature_id}`));
    }
    cell.appendChild(el("div", "thumb-label", `${entry.image_id} · f${entry.feature_id}`));
    cell.addEventListener("click", () => {
      if (this.selection.has(key)) this.selection.delete(key);
      else this.selection.add(key);
      this.render();
    });
    return cell;
  }

  private statusBar(): HTMLElement {
    const bar = el("div", "status-bar");
    const named = this.activations.filter((a) => a.status === "named").length;
    const total = this.activations.length;
    const coverage = el("span", "coverage");
    if (this.stats) {
      coverage.textContent =
        `named ${this.stats.named} / ${this.stats.significant_total} · ` +
        `activation ${percent(this.stats.activation_coverage)} · ` +
        `partial ${percent(this.stats.partial_coverage)} · ` +
        `complete ${percent(this.stats.complete_coverage)}`;
    } else {
      coverage.textContent = `named ${named} / ${total}`;
    }
    bar.appendChild(coverage);
    bar.appendChild(el("span", "selection-count", `${this.selection.size} selected`));
    if (this.lastError) {
      const banner = el("div", "error-banner", this.lastError);
      if (this.loadFailed) {
        const retry = el("button", "retry", "retry");
        retry.addEventListener("click", () => void this.start());
        banner.appendChild(retry);
      }
      bar.appendChild(banner);
    }
    return bar;
  }

  private actionBar(): HTMLElement {
    const bar = el("div", "actions");
    const nameInput = el("input", "new-concept-name");
    nameInput.placeholder = "new concept name";
    const create = el("button", "create-concept", "create concept");
    create.addEventListener("click", () => void this.createConcept(nameInput.value));
    const toUnlabeled = el("button", "move-to-unlabeled", "back to unlabeled");
    toUnlabeled.addEventListener("click", () => void this.moveSelectionTo(null));
    const discard = el("button", "discard", "discard");
    discard.addEventListener("click", () => void this.discardSelection());
    const restore = el("button", "restore", "restore");
    restore.addEventListener("click", () => void this.restoreSelection());
    const undo = el("button", "undo", "undo");
    undo.disabled = !this.session.canUndo();
    undo.addEventListener("click", () => void this.undo());
    bar.append(nameInput, create, toUnlabeled, discard, restore, undo);
    return bar;
  }

  private conceptCard(conceptId: string, name: string, keys: Set<string>): HTMLElement {
    const card = el("div", "concept-card");
    card.dataset.concept = conceptId;
    const header = el("div", "concept-header");
    const nameInput = el("input", "concept-name");
    nameInput.value = name;
    nameInput.addEventListener("change", () =>
      void this.renameConcept(conceptId, nameInput.value),
    );
    header.appendChild(nameInput);
    header.appendChild(el("span", "concept-size", `${keys.size}`));
    const moveHere = el("button", "move-here", "move selection here");
    moveHere.addEventListener("click", () => void this.moveSelectionTo(conceptId));
    header.appendChild(moveHere);

    const others = this.session.naming.concepts.filter((c) => c.concept_id !== conceptId);
    if (others.length > 0) {
      const select = el("select", "merge-select");
      const placeholder = el("option", undefined, "merge into…");
      placeholder.value = "";
      select.appendChild(placeholder);
      for (const other of others) {
        const option = el("option", undefined, other.name || other.concept_id);
        option.value = other.concept_id;
        select.appendChild(option);
      }
      select.addEventListener("change", () => {
        if (select.value) void this.mergeConcepts(conceptId, select.value);
      });
      header.appendChild(select);
    }
    card.appendChild(header);

    const grid = el("div", "concept-grid");
    for (const entry of this.activations) {
      if (keys.has(this.entryKey(entry))) grid.appendChild(this.thumb(entry));
    }
    card.appendChild(grid);
    return card;
  }

  render(): void {
    this.root.textContent = "";
    this.root.appendChild(this.statusBar());
    this.root.appendChild(this.actionBar());

    const naming = this.session.naming;
    const named = new Map<string, string>(); // key -> concept_id
    for (const concept of naming.concepts) {
      for (const ref of concept.members) named.set(refKey(ref), concept.concept_id);
    }
    const discarded = new Set(naming.discarded.map(refKey));

    const unlabeled = el("section", "unlabeled");
    unlabeled.appendChild(el("h2", undefined, "Unlabeled examples"));
    const grid = el("div", "unlabeled-grid");
    let unnamedCount = 0;
    for (const entry of this.activations) {
      const key = this.entryKey(entry);
      if (!named.has(key) && !discarded.has(key)) {
        grid.appendChild(this.thumb(entry));
        unnamedCount += 1;
      }
    }
    if (unnamedCount === 0 && this.activations.length > 0) {
      unlabeled.appendChild(
        el("div", "completion-banner", "every significant activation is handled"),
      );
    }
    unlabeled.appendChild(grid);
    this.root.appendChild(unlabeled);

    const concepts = el("section", "concepts");
    concepts.appendChild(el("h2", undefined, "Visual concepts"));
    const list = el("div", "concept-list");
    for (const concept of naming.concepts) {
      list.appendChild(
        this.conceptCard(
          concept.concept_id,
          concept.name,
          new Set(concept.members.map(refKey)),
        ),
      );
    }
    concepts.appendChild(list);
    this.root.appendChild(concepts);

    if (discarded.size > 0) {
      const section = el("section", "discarded");
      section.appendChild(el("h2", undefined, "Discarded"));
      const dgrid = el("div", "discarded-grid");
      for (const entry of this.activations) {
        if (discarded.has(this.entryKey(entry))) dgrid.appendChild(this.thumb(entry));
      }
      section.appendChild(dgrid);
      this.root.appendChild(section);
    }
  }
}
