/* @ts-self-types="./ond_web.d.ts" */

/**
 * OND and critically damped PD traces from the same start.
 */
export class Convergence {
    static __wrap(ptr) {
        const obj = Object.create(Convergence.prototype);
        obj.__wbg_ptr = ptr;
        ConvergenceFinalization.register(obj, obj.__wbg_ptr, obj);
        return obj;
    }
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        ConvergenceFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_convergence_free(ptr, 0);
    }
    /**
     * Time after which OND stays ahead of PD, if it does.
     * @returns {number | undefined}
     */
    get crossover() {
        const ret = wasm.convergence_crossover(this.__wbg_ptr);
        return ret[0] === 0 ? undefined : ret[1];
    }
    /**
     * `log10 |x1|` floor used for plotting.
     * @returns {number}
     */
    get floor() {
        const ret = wasm.convergence_floor(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {Float64Array}
     */
    get ond_x1() {
        const ret = wasm.convergence_ond_x1(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * @returns {Float64Array}
     */
    get ond_x2() {
        const ret = wasm.convergence_ond_x2(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * @returns {Float64Array}
     */
    get pd_x1() {
        const ret = wasm.convergence_pd_x1(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * @returns {Float64Array}
     */
    get pd_x2() {
        const ret = wasm.convergence_pd_x2(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * @returns {Float64Array}
     */
    get t() {
        const ret = wasm.convergence_t(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
}
if (Symbol.dispose) Convergence.prototype[Symbol.dispose] = Convergence.prototype.free;

/**
 * Measured and fitted response of the synthetic voice coil.
 */
export class Identification {
    static __wrap(ptr) {
        const obj = Object.create(Identification.prototype);
        obj.__wbg_ptr = ptr;
        IdentificationFinalization.register(obj, obj.__wbg_ptr, obj);
        return obj;
    }
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        IdentificationFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_identification_free(ptr, 0);
    }
    /**
     * @returns {number}
     */
    get gain() {
        const ret = wasm.__wbg_get_identification_gain(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get margin_deg() {
        const ret = wasm.__wbg_get_identification_margin_deg(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get omega_c() {
        const ret = wasm.__wbg_get_identification_omega_c(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get tau() {
        const ret = wasm.__wbg_get_identification_tau(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get true_gain() {
        const ret = wasm.__wbg_get_identification_true_gain(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    get true_tau() {
        const ret = wasm.__wbg_get_identification_true_tau(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {Float64Array}
     */
    get magnitude() {
        const ret = wasm.identification_magnitude(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * @returns {Float64Array}
     */
    get omega() {
        const ret = wasm.identification_omega(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * @returns {Float64Array}
     */
    get phase_deg() {
        const ret = wasm.identification_phase_deg(this.__wbg_ptr);
        var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
        return v1;
    }
    /**
     * @param {number} arg0
     */
    set gain(arg0) {
        wasm.__wbg_set_identification_gain(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set margin_deg(arg0) {
        wasm.__wbg_set_identification_margin_deg(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set omega_c(arg0) {
        wasm.__wbg_set_identification_omega_c(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set tau(arg0) {
        wasm.__wbg_set_identification_tau(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set true_gain(arg0) {
        wasm.__wbg_set_identification_true_gain(this.__wbg_ptr, arg0);
    }
    /**
     * @param {number} arg0
     */
    set true_tau(arg0) {
        wasm.__wbg_set_identification_true_tau(this.__wbg_ptr, arg0);
    }
}
if (Symbol.dispose) Identification.prototype[Symbol.dispose] = Identification.prototype.free;

/**
 * Regularized OND (`k`, `mu`) and PD with the double pole at `-sqrt(k)`,
 * both from `(x1, x2)`.
 * @param {number} k
 * @param {number} mu
 * @param {number} x1
 * @param {number} x2
 * @param {number} horizon
 * @returns {Convergence}
 */
export function convergence(k, mu, x1, x2, horizon) {
    const ret = wasm.convergence(k, mu, x1, x2, horizon);
    if (ret[2]) {
        throw takeFromExternrefTable0(ret[1]);
    }
    return Convergence.__wrap(ret[0]);
}

/**
 * Default regularization, for the page's initial form values.
 * @returns {number}
 */
export function default_mu() {
    const ret = wasm.default_mu();
    return ret;
}

/**
 * `|dV/dt|` on an `n1 x n2` grid over `[-e1_max, e1_max] x [-e2_max,
 * e2_max]`, row-major in `e1`.
 * @param {number} k
 * @param {number} mu
 * @param {number} e1_max
 * @param {number} e2_max
 * @param {number} n1
 * @param {number} n2
 * @returns {Float64Array}
 */
export function energy_rate(k, mu, e1_max, e2_max, n1, n2) {
    const ret = wasm.energy_rate(k, mu, e1_max, e2_max, n1, n2);
    if (ret[3]) {
        throw takeFromExternrefTable0(ret[2]);
    }
    var v1 = getArrayF64FromWasm0(ret[0], ret[1]).slice();
    wasm.__wbindgen_free(ret[0], ret[1] * 8, 8);
    return v1;
}

/**
 * Identifies the lab voice coil with the given friction (N) and ripple
 * (N) levels, fits `(K, tau)` and evaluates the PD loop of gain `gamma`
 * on the measured points.
 * @param {number} coulomb
 * @param {number} ripple
 * @param {number} gamma
 * @param {number} points
 * @returns {Identification}
 */
export function identify(coulomb, ripple, gamma, points) {
    const ret = wasm.identify(coulomb, ripple, gamma, points);
    if (ret[2]) {
        throw takeFromExternrefTable0(ret[1]);
    }
    return Identification.__wrap(ret[0]);
}
function __wbg_get_imports() {
    const import0 = {
        __proto__: null,
        __wbg___wbindgen_throw_344f42d3211c4765: function(arg0, arg1) {
            throw new Error(getStringFromWasm0(arg0, arg1));
        },
        __wbindgen_cast_0000000000000001: function(arg0, arg1) {
            // Cast intrinsic for `Ref(String) -> Externref`.
            const ret = getStringFromWasm0(arg0, arg1);
            return ret;
        },
        __wbindgen_init_externref_table: function() {
            const table = wasm.__wbindgen_externrefs;
            const offset = table.grow(4);
            table.set(0, undefined);
            table.set(offset + 0, undefined);
            table.set(offset + 1, null);
            table.set(offset + 2, true);
            table.set(offset + 3, false);
        },
    };
    return {
        __proto__: null,
        "./ond_web_bg.js": import0,
    };
}

const ConvergenceFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_convergence_free(ptr, 1));
const IdentificationFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_identification_free(ptr, 1));

function getArrayF64FromWasm0(ptr, len) {
    ptr = ptr >>> 0;
    return getFloat64ArrayMemory0().subarray(ptr / 8, ptr / 8 + len);
}

let cachedFloat64ArrayMemory0 = null;
function getFloat64ArrayMemory0() {
    if (cachedFloat64ArrayMemory0 === null || cachedFloat64ArrayMemory0.byteLength === 0) {
        cachedFloat64ArrayMemory0 = new Float64Array(wasm.memory.buffer);
    }
    return cachedFloat64ArrayMemory0;
}

function getStringFromWasm0(ptr, len) {
    return decodeText(ptr >>> 0, len);
}

let cachedUint8ArrayMemory0 = null;
function getUint8ArrayMemory0() {
    if (cachedUint8ArrayMemory0 === null || cachedUint8ArrayMemory0.byteLength === 0) {
        cachedUint8ArrayMemory0 = new Uint8Array(wasm.memory.buffer);
    }
    return cachedUint8ArrayMemory0;
}

function takeFromExternrefTable0(idx) {
    const value = wasm.__wbindgen_externrefs.get(idx);
    wasm.__externref_table_dealloc(idx);
    return value;
}

let cachedTextDecoder = new TextDecoder('utf-8', { ignoreBOM: true, fatal: true });
cachedTextDecoder.decode();
const MAX_SAFARI_DECODE_BYTES = 2146435072;
let numBytesDecoded = 0;
function decodeText(ptr, len) {
    numBytesDecoded += len;
    if (numBytesDecoded >= MAX_SAFARI_DECODE_BYTES) {
        cachedTextDecoder = new TextDecoder('utf-8', { ignoreBOM: true, fatal: true });
        cachedTextDecoder.decode();
        numBytesDecoded = len;
    }
    return cachedTextDecoder.decode(getUint8ArrayMemory0().subarray(ptr, ptr + len));
}

let wasmModule, wasmInstance, wasm;
function __wbg_finalize_init(instance, module) {
    wasmInstance = instance;
    wasm = instance.exports;
    wasmModule = module;
    cachedFloat64ArrayMemory0 = null;
    cachedUint8ArrayMemory0 = null;
    wasm.__wbindgen_start();
    return wasm;
}

async function __wbg_load(module, imports) {
    if (typeof Response === 'function' && module instanceof Response) {
        if (typeof WebAssembly.instantiateStreaming === 'function') {
            try {
                return await WebAssembly.instantiateStreaming(module, imports);
            } catch (e) {
                const validResponse = module.ok && expectedResponseType(module.type);

                if (validResponse && module.headers.get('Content-Type') !== 'application/wasm') {
                    console.warn("`WebAssembly.instantiateStreaming` failed because your server does not serve Wasm with `application/wasm` MIME type. Falling back to `WebAssembly.instantiate` which is slower. Original error:\n", e);

                } else { throw e; }
            }
        }

        const bytes = await module.arrayBuffer();
        return await WebAssembly.instantiate(bytes, imports);
    } else {
        const instance = await WebAssembly.instantiate(module, imports);

        if (instance instanceof WebAssembly.Instance) {
            return { instance, module };
        } else {
            return instance;
        }
    }

    function expectedResponseType(type) {
        switch (type) {
            case 'basic': case 'cors': case 'default': return true;
        }
        return false;
    }
}

function initSync(module) {
    if (wasm !== undefined) return wasm;


    if (module !== undefined) {
        if (Object.getPrototypeOf(module) === Object.prototype) {
            ({module} = module)
        } else {
            console.warn('using deprecated parameters for `initSync()`; pass a single object instead')
        }
    }

    const imports = __wbg_get_imports();
    if (!(module instanceof WebAssembly.Module)) {
        module = new WebAssembly.Module(module);
    }
    const instance = new WebAssembly.Instance(module, imports);
    return __wbg_finalize_init(instance, module);
}

async function __wbg_init(module_or_path) {
    if (wasm !== undefined) return wasm;


    if (module_or_path !== undefined) {
        if (Object.getPrototypeOf(module_or_path) === Object.prototype) {
            ({module_or_path} = module_or_path)
        } else {
            console.warn('using deprecated parameters for the initialization function; pass a single object instead')
        }
    }

    if (module_or_path === undefined) {
        module_or_path = new URL('ond_web_bg.wasm', import.meta.url);
    }
    const imports = __wbg_get_imports();

    if (typeof module_or_path === 'string' || (typeof Request === 'function' && module_or_path instanceof Request) || (typeof URL === 'function' && module_or_path instanceof URL)) {
        module_or_path = fetch(module_or_path);
    }

    const { instance, module } = await __wbg_load(await module_or_path, imports);

    return __wbg_finalize_init(instance, module);
}

export { initSync, __wbg_init as default };
