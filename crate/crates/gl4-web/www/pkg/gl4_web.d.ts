/* tslint:disable */
/* eslint-disable */

/**
 * Closest point on the surface and Fermi coordinates of (ρ₁e^{iθ₁}, ρ₂e^{iθ₂}).
 */
export function fermi_probe(rho1: number, theta1: number, rho2: number, theta2: number, eps: number): string;

/**
 * U and V thinned to at most `points` samples, as JSON.
 */
export function vortex_profile(lambda: number, r_max: number, nodes: number, points: number): string;

/**
 * ∮ω over a circle of radius r in the normal disk at (s, θ), centred at (a, b).
 */
export function winding(s: number, theta: number, radius: number, a: number, b: number, n_u: number, n_theta: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly fermi_probe: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly vortex_profile: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly winding: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
