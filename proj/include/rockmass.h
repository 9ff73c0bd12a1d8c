/* C API for the rockmass shared library.
 *
 * All functions return rm_status; on failure rm_last_error() holds a
 * message for the calling thread. Handles are opaque and must be released
 * with their _free function.
 */
#ifndef ROCKMASS_H
#define ROCKMASS_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rm_status {
    RM_OK = 0,
    RM_ERR_CONFIG = 2, /* bad configuration / arguments */
    RM_ERR_DATA = 3,   /* unreadable or inconsistent input data */
    RM_ERR_RUNTIME = 4 /* everything else */
} rm_status;

const char* rm_version(void);

/* Message for the last failure on this thread; empty string when none. */
const char* rm_last_error(void);

/* Runs one workflow command ("synth", "ingest", "aggregate", "train", "cv",
 * "tune", "predict", "report") with a JSON configuration string. Artifacts
 * land in out_dir. */
rm_status rm_run_command(const char* command, const char* config_json, const char* out_dir);

/* Opaque fitted model. */
typedef struct rm_model rm_model;

rm_status rm_model_load(const char* path, rm_model** out);
rm_status rm_model_from_json(const char* json, rm_model** out);
void rm_model_free(rm_model* model);

/* Model document as JSON; the pointer stays valid until the model is freed. */
const char* rm_model_json(const rm_model* model);

/* Predicts sections_csv rows into predictions_csv (label + per-class
 * probabilities, or value for regressors). Labels in the input are ignored. */
rm_status rm_model_predict_csv(const rm_model* model, const char* sections_csv,
                               const char* predictions_csv);

#ifdef __cplusplus
}
#endif

#endif /* ROCKMASS_H */
