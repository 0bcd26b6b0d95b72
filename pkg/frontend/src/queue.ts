/**
 * Serialized optimistic action queue.
 *
 * User actions apply to the UI immediately and run against the agent one at
 * a time, in order, so two rapid clicks can never interleave conflicting
 * state. A failed remote call reverts its optimistic change and surfaces
 * the error; the next poll reconciles whatever really happened.
 */

export interface Action<T> {
  /** Apply the optimistic change; returns a snapshot for revert. */
  apply: () => T;
  /** The remote call. */
  remote: () => Promise<unknown>;
  /** Undo the optimistic change after a remote failure. */
  revert: (snapshot: T) => void;
  onError?: (error: Error) => void;
}

export class ActionQueue {
  private chain: Promise<void> = Promise.resolve();
  private pending = 0;

  get size(): number {
    return this.pending;
  }

  get idle(): Promise<void> {
    return this.chain;
  }

  push<T>(action: Action<T>): Promise<void> {
    this.pending += 1;
    const snapshot = action.apply();
    this.chain = this.chain
      .then(() => action.remote())
      .then(
        () => undefined,
        (error: Error) => {
          action.revert(snapshot);
          action.onError?.(error);
        },
      )
      .finally(() => {
        this.pending -= 1;
      });
    return this.chain;
  }
}
