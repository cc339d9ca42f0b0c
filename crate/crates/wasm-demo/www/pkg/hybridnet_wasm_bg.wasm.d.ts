/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_demo_free: (a: number, b: number) => void;
export const demo_cell_rects: (a: number) => [number, number];
export const demo_die_side: (a: number) => number;
export const demo_geo_edges: (a: number) => [number, number];
export const demo_grid_side: (a: number) => number;
export const demo_new: (a: number, b: number) => [number, number, number];
export const demo_predict: (a: number) => [number, number, number, number];
export const demo_rudy: (a: number) => [number, number];
export const demo_score: (a: number) => [number, number, number, number];
export const demo_start_training: (a: number, b: number, c: number, d: number, e: number) => [number, number];
export const demo_targets: (a: number) => [number, number, number, number];
export const demo_topo_edges: (a: number) => [number, number];
export const demo_train_epoch: (a: number) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
