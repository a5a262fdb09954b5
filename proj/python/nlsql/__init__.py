"""NL2SQL pipeline engine for small language models.

The heavy lifting lives in the compiled `_core` extension; this package
re-exports its public surface.
"""

from nlsql._core import (  # noqa: F401
    Backend,
    BackendRouter,
    BenchOutcome,
    CallRecord,
    Candidate,
    CandidateOrigin,
    ColumnInfo,
    DatabaseSchema,
    DatasetExample,
    DatasetFormat,
    ExecStatus,
    ExecutionOutcome,
    ForeignKeyInfo,
    HttpBackend,
    HttpBackendConfig,
    ModelRole,
    NlsqlError,
    PathKind,
    Pipeline,
    PipelineConfig,
    PipelineResult,
    PromptSet,
    QuestionTask,
    RenderedPrompt,
    Report,
    RunConfig,
    SamplingParams,
    ScriptedBackend,
    StageKind,
    StageToggles,
    TableInfo,
    execute,
    extract_answer,
    extract_columns,
    extract_index,
    extract_sql,
    extract_tables,
    judge,
    load_dataset,
    load_run_config,
    load_schema,
    path_name,
    render_ddl,
    report_from_traces,
    resolve_db_path,
    resolve_identifier,
    results_match,
    results_match_rows,
    run_bench,
    stage_name,
)

__all__ = [name for name in dir() if not name.startswith("_")]
