/* tslint:disable */
/* eslint-disable */

export class TreeFit {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly curve_x: Float64Array;
    readonly curve_y: Float64Array;
    readonly leaves: number;
    /**
     * Printed tree.
     */
    readonly text: string;
    /**
     * Training MMRE in percent.
     */
    readonly train_mmre: number;
}

export function accuracy(actual: Float64Array, predicted: Float64Array, level: number): Float64Array;

/**
 * Runs the Bees Algorithm with default settings on `sphere`, `rastrigin`
 * or `rosenbrock`.
 */
export function bees_trace(_function: string, dims: number, iterations: number, seed: bigint): Float64Array;

/**
 * Fits a model tree to `(x, y)` points.
 */
export function fit_tree(xs: Float64Array, ys: Float64Array, c: number, prune: boolean, k: number, t: number): TreeFit;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_treefit_free: (a: number, b: number) => void;
    readonly accuracy: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly bees_trace: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
    readonly fit_tree: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number];
    readonly treefit_curve_x: (a: number) => [number, number];
    readonly treefit_curve_y: (a: number) => [number, number];
    readonly treefit_leaves: (a: number) => number;
    readonly treefit_text: (a: number) => [number, number];
    readonly treefit_train_mmre: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
