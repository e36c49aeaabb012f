/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_convergence_free: (a: number, b: number) => void;
export const __wbg_get_identification_gain: (a: number) => number;
export const __wbg_get_identification_margin_deg: (a: number) => number;
export const __wbg_get_identification_omega_c: (a: number) => number;
export const __wbg_get_identification_tau: (a: number) => number;
export const __wbg_get_identification_true_gain: (a: number) => number;
export const __wbg_get_identification_true_tau: (a: number) => number;
export const __wbg_identification_free: (a: number, b: number) => void;
export const __wbg_set_identification_gain: (a: number, b: number) => void;
export const __wbg_set_identification_margin_deg: (a: number, b: number) => void;
export const __wbg_set_identification_omega_c: (a: number, b: number) => void;
export const __wbg_set_identification_tau: (a: number, b: number) => void;
export const __wbg_set_identification_true_gain: (a: number, b: number) => void;
export const __wbg_set_identification_true_tau: (a: number, b: number) => void;
export const convergence: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const convergence_crossover: (a: number) => [number, number];
export const convergence_floor: (a: number) => number;
export const convergence_ond_x1: (a: number) => [number, number];
export const convergence_ond_x2: (a: number) => [number, number];
export const convergence_pd_x1: (a: number) => [number, number];
export const convergence_pd_x2: (a: number) => [number, number];
export const convergence_t: (a: number) => [number, number];
export const default_mu: () => number;
export const energy_rate: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
export const identification_magnitude: (a: number) => [number, number];
export const identification_omega: (a: number) => [number, number];
export const identification_phase_deg: (a: number) => [number, number];
export const identify: (a: number, b: number, c: number, d: number) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
