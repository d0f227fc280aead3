// Facet panel state: per facet either the explicit "any" choice or a
// non-empty set of bin ids, never both and never an empty set. The panel
// mirrors what the server will store when the session is submitted.

import type { SelectionWire } from "./types.js";

export function newSessionId(): string {
  const noise = Math.random().toString(36).slice(2, 10);
  return `web-${Date.now().toString(36)}-${noise}`;
}

export class FacetPanel {
  readonly facetIds: readonly string[];
  private selections = new Map<string, Set<string>>(); // absent key = "any"
  private dirty = new Set<string>();
  private sequence = 0;
  private _sessionId: string;

  constructor(facetIds: readonly string[], sessionId: string = newSessionId()) {
    this.facetIds = [...facetIds];
    this._sessionId = sessionId;
  }

  get sessionId(): string {
    return this._sessionId;
  }

  nextSequence(): number {
    this.sequence += 1;
    return this.sequence;
  }

  private assertKnown(facetId: string): void {
    if (!this.facetIds.includes(facetId)) {
      throw new Error(`unknown facet ${facetId}`);
    }
  }

  isAny(facetId: string): boolean {
    this.assertKnown(facetId);
    return !this.selections.has(facetId);
  }

  bins(facetId: string): string[] {
    this.assertKnown(facetId);
    return [...(this.selections.get(facetId) ?? [])].sort();
  }

  isDirty(facetId: string): boolean {
    this.assertKnown(facetId);
    return this.dirty.has(facetId);
  }

  /** Toggle one bin: selecting clears "any"; deselecting the last bin restores it. */
  toggleBin(facetId: string, binId: string): SelectionWire {
    this.assertKnown(facetId);
    const current = this.selections.get(facetId) ?? new Set<string>();
    if (current.has(binId)) {
      current.delete(binId);
    } else {
      current.add(binId);
    }
    if (current.size === 0) {
      this.selections.delete(facetId);
    } else {
      this.selections.set(facetId, current);
    }
    this.dirty.add(facetId);
    return this.selectionOf(facetId);
  }

  /** The explicit "any" control: clears every selected bin of the facet. */
  setAny(facetId: string): SelectionWire {
    this.assertKnown(facetId);
    this.selections.delete(facetId);
    this.dirty.add(facetId);
    return "any";
  }

  selectionOf(facetId: string): SelectionWire {
    return this.isAny(facetId) ? "any" : this.bins(facetId);
  }

  /** Full panel state in wire shape; this is what the stored record must equal. */
  snapshot(): Record<string, SelectionWire> {
    const out: Record<string, SelectionWire> = {};
    for (const facetId of this.facetIds) {
      out[facetId] = this.selectionOf(facetId);
    }
    return out;
  }

  specificCount(): number {
    return this.selections.size;
  }

  /** Back to the all-"any" default under a fresh session id. */
  reset(sessionId: string = newSessionId()): void {
    this.selections.clear();
    this.dirty.clear();
    this.sequence = 0;
    this._sessionId = sessionId;
  }
}
