#ifndef EVANESCENT_H
#define EVANESCENT_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Weight of the delta distribution carried by the on-shell photon delay.
 */
#define EV_ON_SHELL_DELAY_WEIGHT -3.141592653589793

typedef enum EvExitRule {
  EV_EXIT_RULE_COMPLETE_CYCLE = 0,
  EV_EXIT_RULE_CLIP = 1,
} EvExitRule;

typedef enum EvProcessKind {
  EV_PROCESS_KIND_STABLE_TRANSFER = 0,
  EV_PROCESS_KIND_DECAY = 1,
  EV_PROCESS_KIND_TRANSMUTATION = 2,
} EvProcessKind;

typedef enum EvStatus {
  EV_STATUS_OK = 0,
  EV_STATUS_NULL_POINTER = 1,
  EV_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The argument sits on a pole of the requested function.
   */
  EV_STATUS_POLE = 3,
  /**
   * The point is on shell; the delay is a distribution.
   */
  EV_STATUS_ON_SHELL = 4,
  EV_STATUS_PARSE_ERROR = 5,
  EV_STATUS_OUT_OF_RANGE = 6,
  EV_STATUS_PANIC = 7,
} EvStatus;

/**
 * Opaque list of particle records.
 */
typedef struct EvParticleTable EvParticleTable;

typedef struct EvPropagatorTimes {
  double tau1;
  double tau2;
  double tau2_exact;
  bool retarded;
} EvPropagatorTimes;

typedef struct EvTemporalPair {
  double tau1;
  double tau2;
} EvTemporalPair;

typedef struct EvWalkConfig {
  double mean_free_path;
  double jump;
  double delay;
  double length;
  uint64_t n_walkers;
  uint64_t master_seed;
  enum EvExitRule exit_rule;
} EvWalkConfig;

typedef struct EvTransportResult {
  double mean_speed_ratio;
  double standard_error;
  double implied_group_index;
  double group_index_standard_error;
  double mean_scatter_count;
  double scatter_count_standard_error;
  uint64_t walker_count;
  uint64_t master_seed;
} EvTransportResult;

typedef struct EvRsBound {
  double lhs;
  double commutator_term;
  double covariance_term;
  double rhs;
} EvRsBound;

typedef struct EvNeutrinoEstimate {
  /**
   * eV².
   */
  double delta_m2;
  /**
   * Seconds.
   */
  double tau;
  /**
   * Published-pipeline headline, eV.
   */
  double delta_m;
  /**
   * ħ/(2τ), eV.
   */
  double audited_delta_m;
  /**
   * Number of flagged steps in the audit log.
   */
  uint32_t flag_count;
} EvNeutrinoEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on the calling thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *ev_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ev_version(void);

/**
 * Formation time `−(r/c)·cot(ωr/c)`, seconds.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum EvStatus ev_mixed_formation_time(double omega, double r, double pole_epsilon, double *out);

/**
 * Coulomb-subtracted series for the formation time with `n_terms` explicit
 * terms and a tail estimate, seconds.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum EvStatus ev_renormalized_formation_time(double omega,
                                             double r,
                                             uint64_t n_terms,
                                             double pole_epsilon,
                                             double *out);

/**
 * Formation path `πc/|Δω|`, metres.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum EvStatus ev_formation_path(double delta_omega, double *out);

/**
 * Photon propagator times off the light cone. On the cone returns
 * `EV_STATUS_ON_SHELL`; the delay is then `EV_ON_SHELL_DELAY_WEIGHT`
 * times a delta function.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum EvStatus ev_photon_propagator_times(double omega,
                                         double k_abs,
                                         double pole_epsilon,
                                         struct EvPropagatorTimes *out);

/**
 * Delay and formation time of the massive Green function, natural units.
 * `above_threshold` (optional) receives whether `E > m`.
 *
 * # Safety
 * `out` must be valid for writes; `above_threshold` may be null.
 */
enum EvStatus ev_massive_temporal(double energy,
                                  double mass,
                                  double r,
                                  double pole_epsilon,
                                  struct EvTemporalPair *out,
                                  bool *above_threshold);

/**
 * Delay and formation time of a tabulated response `S(ω) = re + i·im` on
 * strictly increasing `omega`. `step <= 0` selects the default step.
 *
 * # Safety
 * `omega`, `re` and `im` must each point to `n` readable values; `out` must
 * be valid for writes.
 */
enum EvStatus ev_temporal_pair_tabulated(const double *omega,
                                         const double *re,
                                         const double *im,
                                         size_t n,
                                         double at,
                                         double step,
                                         bool richardson,
                                         struct EvTemporalPair *out);

/**
 * Mean free path `1/(ρσ)`, metres.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum EvStatus ev_free_path(double rho, double sigma, double *out);

/**
 * `u/c = 1 + 2π(n − 1)`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum EvStatus ev_closure_speed_ratio(double n, double *out);

/**
 * Monte Carlo transit. `threads == 0` uses the global pool; the result does
 * not depend on the thread count.
 *
 * # Safety
 * `config` must be readable and `out` valid for writes.
 */
enum EvStatus ev_mc_simulate(const struct EvWalkConfig *config,
                             size_t threads,
                             struct EvTransportResult *out);

/**
 * Minimal time in seconds for energy spread `delta_e` (eV).
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum EvStatus ev_minimal_time(double delta_e, enum EvProcessKind kind, double *out);

/**
 * First `count` maxima in τ of the transition density at `delta_e` (eV).
 *
 * # Safety
 * `out` must be valid for `count` writes.
 */
enum EvStatus ev_transition_maxima(double delta_e, size_t count, double *out);

/**
 * Robertson–Schrödinger terms for `n×n` Hermitian `a`, `b` and state `psi`.
 * Complex numbers are interleaved `(re, im)`; matrices are row-major, so
 * `a` and `b` hold `2n²` doubles and `psi` holds `2n`.
 *
 * # Safety
 * The arrays must be readable for the stated lengths; `out` must be valid
 * for writes.
 */
enum EvStatus ev_rs_bound(size_t n,
                          const double *a,
                          const double *b,
                          const double *psi,
                          struct EvRsBound *out);

/**
 * Upper lifetime bound `factor·ħ/Δm`, seconds, for `Δm` in MeV.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum EvStatus ev_lifetime_bound(double delta_m_lower, double factor, double *out);

/**
 * Neutrino mass estimate for baseline `l_km` and energy `e_gev`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum EvStatus ev_neutrino_mass_estimate(double l_km, double e_gev, struct EvNeutrinoEstimate *out);

/**
 * Parses a NUL-terminated particle table. Free the handle with
 * [`ev_particle_table_free`].
 *
 * # Safety
 * `text` must be a valid C string; `out` must be valid for writes.
 */
enum EvStatus ev_particle_table_load(const char *text, struct EvParticleTable **out);

/**
 * The table bundled with the library.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum EvStatus ev_particle_table_bundled(struct EvParticleTable **out);

/**
 * Number of records, or 0 for a null handle.
 *
 * # Safety
 * `table` must be null or a live handle.
 */
size_t ev_particle_table_len(const struct EvParticleTable *table);

/**
 * `Δm·τ/ħ` of record `index`.
 *
 * # Safety
 * `table` must be a live handle and `out` valid for writes.
 */
enum EvStatus ev_particle_table_product(const struct EvParticleTable *table,
                                        size_t index,
                                        double *out);

/**
 * Releases a table handle. Null is ignored.
 *
 * # Safety
 * `table` must be null or a handle not yet freed.
 */
void ev_particle_table_free(struct EvParticleTable *table);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EVANESCENT_H */
