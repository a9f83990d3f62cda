#ifndef KEEN_KEEN_H
#define KEEN_KEEN_H

/*
 * C API for the Keen-model analysis library.
 *
 * A handle carries a model configuration (JSON, same schema as the CLI
 * config) and the last error message. Operations are invoked by name with a
 * JSON request and produce a JSON response (some responses embed CSV or SVG
 * payloads as string fields). Returned strings are owned by the caller and
 * must be released with keen_string_free().
 */

#ifdef __cplusplus
extern "C" {
#endif

#define KEEN_OK 0
#define KEEN_ERR_USAGE 1      /* invalid configuration or request */
#define KEEN_ERR_NUMERICAL 2  /* a numerical stage failed */

typedef struct keen_handle keen_handle;

/* config_json may be NULL or "{}" for the default model. The handle is
 * always created; configuration errors surface as KEEN_ERR_USAGE from
 * keen_run with the message available via keen_last_error. */
keen_handle* keen_create(const char* config_json);
void keen_destroy(keen_handle* h);

/* Message for the most recent failure on this handle; empty string if the
 * last call succeeded. The pointer stays valid until the next call on the
 * same handle. */
const char* keen_last_error(const keen_handle* h);

/* Operations: simulate, classify, quintic, amplitudes, modes, collapse-fit,
 * sweep1d, regime2d, mc-ic, mc-params, branch-switch, separatrix, ratio.
 * On success *out receives the JSON response. */
int keen_run(keen_handle* h, const char* op, const char* request_json,
             char** out);

void keen_string_free(char* s);

const char* keen_version(void);

#ifdef __cplusplus
}
#endif

#endif /* KEEN_KEEN_H */
