//! C ABI for the beehive discovery workbench.
//!
//! Conventions:
//! - Every fallible function returns a [`BhStatus`]; on failure a message is
//!   kept per thread and can be fetched with [`bh_last_error_message`].
//! - Objects are opaque handles created by `*_new`/`*_load` functions and
//!   released by the matching `*_free`. Passing NULL to a `*_free` is a no-op.
//! - Strings handed out by the library are NUL-terminated UTF-8 and must be
//!   released with [`bh_string_free`].
//! - Handles are not synchronized: use a handle from one thread at a time.
//!   Taxonomy and network handles may be shared read-only across threads.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use beehive::discovery::{discover_and_select, DiscoveryQuery};
use beehive::network::{generate_network, GeneratorParams, PeerNetwork, ServiceId};
use beehive::optimizer::{schwefel, BeesParams};
use beehive::qos::QosWeights;
use beehive::substitution::{substitute, EquivalenceCache, SubstitutionRequest, SubstitutionSource};
use beehive::taxonomy::{ConceptId, Taxonomy};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BhStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Parse = 4,
    NotFound = 5,
    Domain = 6,
    Panic = 7,
}

/// Opaque taxonomy handle.
pub struct BhTaxonomy(Taxonomy);

/// Opaque registry network handle.
pub struct BhNetwork(PeerNetwork);

/// Opaque equivalence cache handle.
pub struct BhCache(EquivalenceCache);

/// Outcome of [`bh_discover`]. Release the strings with [`bh_discovery_clear`].
#[repr(C)]
pub struct BhDiscovery {
    pub registry_id: *mut c_char,
    pub service_id: *mut c_char,
    pub similarity: f64,
    pub qos_score: f64,
    pub probes: u64,
}

/// Outcome of [`bh_substitute`]. Release with [`bh_substitution_clear`].
#[repr(C)]
pub struct BhSubstitution {
    pub service_id: *mut c_char,
    /// True when the substitute came from the cache.
    pub cache_hit: bool,
    pub probes: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Fail(BhStatus, String);

impl Fail {
    fn new(status: BhStatus, msg: impl ToString) -> Self {
        Fail(status, msg.to_string())
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `f`, converting failures and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> BhStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            BhStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            BhStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::new(BhStatus::NullArgument, format!("`{name}` is NULL")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::new(BhStatus::InvalidUtf8, format!("`{name}` is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref()
        .ok_or_else(|| Fail::new(BhStatus::NullArgument, format!("`{name}` is NULL")))
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Fail> {
    p.as_mut()
        .ok_or_else(|| Fail::new(BhStatus::NullArgument, format!("`{name}` is NULL")))
}

fn c_string(s: &str) -> *mut c_char {
    CString::new(s).expect("ids contain no NUL").into_raw()
}

unsafe fn weights_arg(p: *const c_char, net: &PeerNetwork) -> Result<QosWeights, Fail> {
    let w = if p.is_null() {
        QosWeights::uniform(net.attributes())
    } else {
        QosWeights::parse(str_arg(p, "weights")?)
    };
    let w = w.map_err(|e| Fail::new(BhStatus::InvalidArgument, e))?;
    w.check_covers(net.attributes())
        .map_err(|e| Fail::new(BhStatus::InvalidArgument, e))?;
    Ok(w)
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn bh_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. Free with
/// [`bh_string_free`].
#[no_mangle]
pub extern "C" fn bh_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |c| c.clone().into_raw()))
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must be NULL or a string obtained from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn bh_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Built-in service-domain taxonomy.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bh_taxonomy_bundled(out: *mut *mut BhTaxonomy) -> BhStatus {
    guard(|| {
        *out_arg(out, "out")? = Box::into_raw(Box::new(BhTaxonomy(Taxonomy::bundled())));
        Ok(())
    })
}

/// Parses a taxonomy document (`child<TAB>parent` lines).
///
/// # Safety
/// `document` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bh_taxonomy_load(document: *const c_char, out: *mut *mut BhTaxonomy) -> BhStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let t = Taxonomy::load(str_arg(document, "document")?).map_err(|e| Fail::new(BhStatus::Parse, e))?;
        *out = Box::into_raw(Box::new(BhTaxonomy(t)));
        Ok(())
    })
}

/// # Safety
/// `t` must be NULL or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn bh_taxonomy_free(t: *mut BhTaxonomy) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Wu–Palmer similarity of two concepts.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn bh_wu_palmer(
    t: *const BhTaxonomy,
    a: *const c_char,
    b: *const c_char,
    out: *mut f64,
) -> BhStatus {
    guard(|| {
        let t = &ref_arg(t, "taxonomy")?.0;
        let out = out_arg(out, "out")?;
        let concept = |p, name| -> Result<ConceptId, Fail> {
            ConceptId::new(str_arg(p, name)?).map_err(|e| Fail::new(BhStatus::InvalidArgument, e))
        };
        let (a, b) = (concept(a, "a")?, concept(b, "b")?);
        *out = t.wu_palmer_similarity(&a, &b).map_err(|e| Fail::new(BhStatus::NotFound, e))?;
        Ok(())
    })
}

/// Parses a network document against taxonomy `t`.
///
/// # Safety
/// Pointers must be valid; `document` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn bh_network_load(
    document: *const c_char,
    t: *const BhTaxonomy,
    out: *mut *mut BhNetwork,
) -> BhStatus {
    guard(|| {
        let t = &ref_arg(t, "taxonomy")?.0;
        let out = out_arg(out, "out")?;
        let net = PeerNetwork::load(str_arg(document, "document")?, t).map_err(|e| Fail::new(BhStatus::Parse, e))?;
        *out = Box::into_raw(Box::new(BhNetwork(net)));
        Ok(())
    })
}

/// Generates a random network with default generator settings.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn bh_network_generate(
    t: *const BhTaxonomy,
    registry_count: usize,
    seed: u64,
    out: *mut *mut BhNetwork,
) -> BhStatus {
    guard(|| {
        let t = &ref_arg(t, "taxonomy")?.0;
        let out = out_arg(out, "out")?;
        let params = GeneratorParams {
            registry_count,
            ..Default::default()
        };
        let (net, _) = generate_network(&params, t, seed).map_err(|e| Fail::new(BhStatus::InvalidArgument, e))?;
        *out = Box::into_raw(Box::new(BhNetwork(net)));
        Ok(())
    })
}

/// Canonical network document. Free with [`bh_string_free`].
///
/// # Safety
/// `net` must be a valid handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bh_network_to_xml(net: *const BhNetwork, out: *mut *mut c_char) -> BhStatus {
    guard(|| {
        let net = &ref_arg(net, "network")?.0;
        *out_arg(out, "out")? = c_string(&net.to_xml());
        Ok(())
    })
}

/// Number of registries; 0 for NULL.
///
/// # Safety
/// `net` must be NULL or a valid handle.
#[no_mangle]
pub unsafe extern "C" fn bh_network_registry_count(net: *const BhNetwork) -> usize {
    net.as_ref().map_or(0, |n| n.0.len())
}

/// # Safety
/// `net` must be NULL or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn bh_network_free(net: *mut BhNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Bees-guided discovery with default parameters followed by QoS selection.
/// `weights` is `"attr:w,attr:w"` or NULL for uniform weights.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn bh_discover(
    net: *const BhNetwork,
    t: *const BhTaxonomy,
    wanted_domain: *const c_char,
    weights: *const c_char,
    requested_level: f64,
    seed: u64,
    out: *mut BhDiscovery,
) -> BhStatus {
    guard(|| {
        let net = &ref_arg(net, "network")?.0;
        let t = &ref_arg(t, "taxonomy")?.0;
        let out = out_arg(out, "out")?;
        let query = DiscoveryQuery {
            wanted_domain: ConceptId::new(str_arg(wanted_domain, "wanted_domain")?)
                .map_err(|e| Fail::new(BhStatus::InvalidArgument, e))?,
            weights: weights_arg(weights, net)?,
            requested_level,
        };
        let r = discover_and_select(net, t, &query, &BeesParams::default(), seed)
            .map_err(|e| Fail::new(BhStatus::Domain, e))?;
        *out = BhDiscovery {
            registry_id: c_string(r.registry_id.as_str()),
            service_id: c_string(r.selected_service.id.as_str()),
            similarity: r.similarity,
            qos_score: r.qos_score,
            probes: r.trace.total_probes,
        };
        Ok(())
    })
}

/// Frees the strings of a [`BhDiscovery`] and nulls them.
///
/// # Safety
/// `d` must be NULL or point to a result filled by [`bh_discover`].
#[no_mangle]
pub unsafe extern "C" fn bh_discovery_clear(d: *mut BhDiscovery) {
    if let Some(d) = d.as_mut() {
        bh_string_free(d.registry_id);
        bh_string_free(d.service_id);
        d.registry_id = ptr::null_mut();
        d.service_id = ptr::null_mut();
    }
}

/// New equivalence cache; `capacity` 0 means unbounded.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bh_cache_new(ttl: u64, capacity: usize, out: *mut *mut BhCache) -> BhStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let cap = (capacity > 0).then_some(capacity);
        let c = EquivalenceCache::new(ttl, cap).map_err(|e| Fail::new(BhStatus::InvalidArgument, e))?;
        *out = Box::into_raw(Box::new(BhCache(c)));
        Ok(())
    })
}

/// Number of stored entries, live or not; 0 for NULL.
///
/// # Safety
/// `c` must be NULL or a valid handle.
#[no_mangle]
pub unsafe extern "C" fn bh_cache_len(c: *const BhCache) -> usize {
    c.as_ref().map_or(0, |c| c.0.len())
}

/// Removes expired entries; returns how many (0 for NULL).
///
/// # Safety
/// `c` must be NULL or a valid handle.
#[no_mangle]
pub unsafe extern "C" fn bh_cache_evict_expired(c: *mut BhCache, now: u64) -> usize {
    c.as_mut().map_or(0, |c| c.0.evict_expired(now))
}

/// # Safety
/// `c` must be NULL or a handle from this library, freed once.
#[no_mangle]
pub unsafe extern "C" fn bh_cache_free(c: *mut BhCache) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Finds a substitute for `failed_id` at logical time `now`, consulting and
/// updating `cache`. `weights` may be NULL for uniform weights.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn bh_substitute(
    cache: *mut BhCache,
    net: *const BhNetwork,
    t: *const BhTaxonomy,
    failed_id: *const c_char,
    weights: *const c_char,
    requested_level: f64,
    now: u64,
    seed: u64,
    out: *mut BhSubstitution,
) -> BhStatus {
    guard(|| {
        let cache = &mut out_arg(cache, "cache")?.0;
        let net = &ref_arg(net, "network")?.0;
        let t = &ref_arg(t, "taxonomy")?.0;
        let out = out_arg(out, "out")?;
        let failed =
            ServiceId::new(str_arg(failed_id, "failed_id")?).map_err(|e| Fail::new(BhStatus::InvalidArgument, e))?;
        let weights = weights_arg(weights, net)?;
        let params = BeesParams::default();
        let request = SubstitutionRequest {
            params: &params,
            weights: &weights,
            requested_level,
            seed,
        };
        let s = substitute(&failed, cache, net, t, &request, now).map_err(|e| {
            let status = match e {
                beehive::SubstitutionError::UnknownFailedService(_) => BhStatus::NotFound,
                _ => BhStatus::Domain,
            };
            Fail::new(status, e)
        })?;
        *out = BhSubstitution {
            service_id: c_string(s.service.id.as_str()),
            cache_hit: s.source == SubstitutionSource::CacheHit,
            probes: s.probes,
        };
        Ok(())
    })
}

/// Frees the string of a [`BhSubstitution`] and nulls it.
///
/// # Safety
/// `s` must be NULL or point to a result filled by [`bh_substitute`].
#[no_mangle]
pub unsafe extern "C" fn bh_substitution_clear(s: *mut BhSubstitution) {
    if let Some(s) = s.as_mut() {
        bh_string_free(s.service_id);
        s.service_id = ptr::null_mut();
    }
}

/// Inverted Schwefel function of `x[0..len]`; maximum ≈ 0.
///
/// # Safety
/// `x` must point to `len` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn bh_schwefel(x: *const f64, len: usize, out: *mut f64) -> BhStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        if x.is_null() || len == 0 {
            return Err(Fail::new(BhStatus::InvalidArgument, "need at least one coordinate"));
        }
        let xs = std::slice::from_raw_parts(x, len);
        *out = schwefel(xs).map_err(|e| Fail::new(BhStatus::InvalidArgument, e))?;
        Ok(())
    })
}
