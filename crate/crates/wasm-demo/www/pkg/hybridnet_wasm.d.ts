/* tslint:disable */
/* eslint-disable */

/**
 * One displayed design plus an optional model being trained on others.
 */
export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * `[x, y, w, h]` per cell.
     */
    cell_rects(): Float64Array;
    die_side(): number;
    /**
     * Undirected Delaunay edges as `[a, b, ...]`.
     */
    geo_edges(): Uint32Array;
    grid_side(): number;
    constructor(seed: number, cells: number);
    /**
     * Standardized per-cell predictions on the displayed design.
     */
    predict(): Float64Array;
    /**
     * RUDY map, row 0 at the bottom.
     */
    rudy(): Float64Array;
    /**
     * `[pearson, spearman, kendall]` of the predictions on the displayed design.
     */
    score(): Float64Array;
    /**
     * Starts a fresh model on designs generated from other seeds.
     */
    start_training(mode: string, hidden: number, lr: number): void;
    targets(): Float64Array;
    /**
     * Undirected topology edges as `[a, b, ...]`.
     */
    topo_edges(): Uint32Array;
    /**
     * Runs one epoch over the training designs; returns the mean loss.
     */
    train_epoch(): number;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_cell_rects: (a: number) => [number, number];
    readonly demo_die_side: (a: number) => number;
    readonly demo_geo_edges: (a: number) => [number, number];
    readonly demo_grid_side: (a: number) => number;
    readonly demo_new: (a: number, b: number) => [number, number, number];
    readonly demo_predict: (a: number) => [number, number, number, number];
    readonly demo_rudy: (a: number) => [number, number];
    readonly demo_score: (a: number) => [number, number, number, number];
    readonly demo_start_training: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly demo_targets: (a: number) => [number, number, number, number];
    readonly demo_topo_edges: (a: number) => [number, number];
    readonly demo_train_epoch: (a: number) => [number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
