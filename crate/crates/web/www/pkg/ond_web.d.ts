/* tslint:disable */
/* eslint-disable */

/**
 * OND and critically damped PD traces from the same start.
 */
export class Convergence {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Time after which OND stays ahead of PD, if it does.
     */
    readonly crossover: number | undefined;
    /**
     * `log10 |x1|` floor used for plotting.
     */
    readonly floor: number;
    readonly ond_x1: Float64Array;
    readonly ond_x2: Float64Array;
    readonly pd_x1: Float64Array;
    readonly pd_x2: Float64Array;
    readonly t: Float64Array;
}

/**
 * Measured and fitted response of the synthetic voice coil.
 */
export class Identification {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    gain: number;
    margin_deg: number;
    omega_c: number;
    tau: number;
    true_gain: number;
    true_tau: number;
    readonly magnitude: Float64Array;
    readonly omega: Float64Array;
    readonly phase_deg: Float64Array;
}

/**
 * Regularized OND (`k`, `mu`) and PD with the double pole at `-sqrt(k)`,
 * both from `(x1, x2)`.
 */
export function convergence(k: number, mu: number, x1: number, x2: number, horizon: number): Convergence;

/**
 * Default regularization, for the page's initial form values.
 */
export function default_mu(): number;

/**
 * `|dV/dt|` on an `n1 x n2` grid over `[-e1_max, e1_max] x [-e2_max,
 * e2_max]`, row-major in `e1`.
 */
export function energy_rate(k: number, mu: number, e1_max: number, e2_max: number, n1: number, n2: number): Float64Array;

/**
 * Identifies the lab voice coil with the given friction (N) and ripple
 * (N) levels, fits `(K, tau)` and evaluates the PD loop of gain `gamma`
 * on the measured points.
 */
export function identify(coulomb: number, ripple: number, gamma: number, points: number): Identification;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_convergence_free: (a: number, b: number) => void;
    readonly __wbg_get_identification_gain: (a: number) => number;
    readonly __wbg_get_identification_margin_deg: (a: number) => number;
    readonly __wbg_get_identification_omega_c: (a: number) => number;
    readonly __wbg_get_identification_tau: (a: number) => number;
    readonly __wbg_get_identification_true_gain: (a: number) => number;
    readonly __wbg_get_identification_true_tau: (a: number) => number;
    readonly __wbg_identification_free: (a: number, b: number) => void;
    readonly __wbg_set_identification_gain: (a: number, b: number) => void;
    readonly __wbg_set_identification_margin_deg: (a: number, b: number) => void;
    readonly __wbg_set_identification_omega_c: (a: number, b: number) => void;
    readonly __wbg_set_identification_tau: (a: number, b: number) => void;
    readonly __wbg_set_identification_true_gain: (a: number, b: number) => void;
    readonly __wbg_set_identification_true_tau: (a: number, b: number) => void;
    readonly convergence: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly convergence_crossover: (a: number) => [number, number];
    readonly convergence_floor: (a: number) => number;
    readonly convergence_ond_x1: (a: number) => [number, number];
    readonly convergence_ond_x2: (a: number) => [number, number];
    readonly convergence_pd_x1: (a: number) => [number, number];
    readonly convergence_pd_x2: (a: number) => [number, number];
    readonly convergence_t: (a: number) => [number, number];
    readonly default_mu: () => number;
    readonly energy_rate: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly identification_magnitude: (a: number) => [number, number];
    readonly identification_omega: (a: number) => [number, number];
    readonly identification_phase_deg: (a: number) => [number, number];
    readonly identify: (a: number, b: number, c: number, d: number) => [number, number, number];
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
