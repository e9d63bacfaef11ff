#ifndef SPS_H
#define SPS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SpsPolicy {
  /**
   * The program's own setting, or first-match.
   */
  SPS_POLICY_DEFAULT = 0,
  SPS_POLICY_FIRST_MATCH = 1,
  SPS_POLICY_RANDOM = 2,
} SpsPolicy;

/**
 * Result codes. Zero is success.
 */
typedef enum SpsStatus {
  SPS_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  SPS_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not UTF-8.
   */
  SPS_STATUS_INVALID_UTF8 = 2,
  /**
   * The source text has syntax or name errors.
   */
  SPS_STATUS_PARSE = 3,
  /**
   * Rules or strategy declarations are invalid.
   */
  SPS_STATUS_BUILD = 4,
  /**
   * The run stopped with an error.
   */
  SPS_STATUS_RUN = 5,
  /**
   * A formalism description could not be compiled.
   */
  SPS_STATUS_COMPILE = 6,
  /**
   * An option value is out of range.
   */
  SPS_STATUS_INVALID_ARGUMENT = 7,
  /**
   * The library panicked; the handle should not be used again.
   */
  SPS_STATUS_INTERNAL = 8,
} SpsStatus;

typedef enum SpsStrategy {
  /**
   * The program's own setting, or basic.
   */
  SPS_STRATEGY_DEFAULT = 0,
  SPS_STRATEGY_BASIC = 1,
  SPS_STRATEGY_TRANSFORMED = 2,
} SpsStrategy;

/**
 * A parsed program.
 */
typedef struct SpsProgram SpsProgram;

/**
 * Run options. Zero-initialized options use the program's settings.
 */
typedef struct SpsRunOptions {
  /**
   * Step limit; 0 keeps the program's own.
   */
  size_t max_steps;
  /**
   * Seed for the random policy; used when `has_seed` is true.
   */
  uint64_t seed;
  bool has_seed;
  /**
   * An `SpsPolicy` value.
   */
  uint32_t policy;
  /**
   * An `SpsStrategy` value.
   */
  uint32_t strategy;
} SpsRunOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses DSL source into a new program handle.
 *
 * # Safety
 * `source` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SpsStatus sps_program_parse(const char *source, struct SpsProgram **out);

/**
 * Compiles a TOML description (`kind` is one of `ts`, `tm`, `axioms`,
 * `ca`, `pcfg`) into a new program handle.
 *
 * # Safety
 * `kind` and `description` must be NUL-terminated strings and `out` a valid pointer.
 */
enum SpsStatus sps_compile(const char *kind, const char *description, struct SpsProgram **out);

/**
 * Releases a program handle. Null is ignored.
 *
 * # Safety
 * `program` must come from this library and not be used afterwards.
 */
void sps_program_free(struct SpsProgram *program);

/**
 * Validates the program with and without its strategy declarations lowered.
 *
 * # Safety
 * `program` must be a live handle.
 */
enum SpsStatus sps_program_check(const struct SpsProgram *program);

/**
 * Renders the program as DSL text.
 *
 * # Safety
 * `program` must be a live handle and `out` a valid pointer.
 */
enum SpsStatus sps_program_to_text(const struct SpsProgram *program, char **out);

/**
 * Options that defer to the program's settings.
 */
struct SpsRunOptions sps_run_options_default(void);

/**
 * Runs the program and writes a JSON object with `state` (canonical
 * key/value strings), `derivation`, `halt` and `trace`.
 *
 * # Safety
 * `program` must be a live handle, `options` null or valid, and `out` a valid pointer.
 */
enum SpsStatus sps_program_run(const struct SpsProgram *program,
                               const struct SpsRunOptions *options,
                               char **out);

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next call into the library on the same thread.
 */
const char *sps_last_error(void);

/**
 * Releases a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void sps_string_free(char *s);

/**
 * Library version, a static string.
 */
const char *sps_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPS_H */
