/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_treefit_free: (a: number, b: number) => void;
export const accuracy: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const bees_trace: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
export const fit_tree: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number];
export const treefit_curve_x: (a: number) => [number, number];
export const treefit_curve_y: (a: number) => [number, number];
export const treefit_leaves: (a: number) => number;
export const treefit_text: (a: number) => [number, number];
export const treefit_train_mmre: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
