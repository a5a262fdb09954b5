"""Smoke tests for the Python bindings: schema introspection, extraction,
prompt rendering, execution, and one scripted end-to-end pipeline run."""

import json
import sqlite3

import pytest

nlsql = pytest.importorskip("nlsql")


@pytest.fixture()
def hr_db(tmp_path):
    db_dir = tmp_path / "hr"
    db_dir.mkdir()
    path = db_dir / "hr.sqlite"
    con = sqlite3.connect(path)
    con.executescript(
        """
        CREATE TABLE Employees (
            employee_id INTEGER PRIMARY KEY, name TEXT NOT NULL,
            department TEXT, salary REAL);
        CREATE TABLE Departments (
            department_id INTEGER PRIMARY KEY, department_name TEXT, location TEXT);
        INSERT INTO Employees VALUES
            (1,'Alice','Engineering',4500.0),(2,'Bob','Sales',3200.0);
        INSERT INTO Departments VALUES (1,'Engineering','Building A');
        """
    )
    con.commit()
    con.close()
    return str(path)


def test_schema_and_ddl(hr_db):
    schema = nlsql.load_schema(hr_db)
    assert schema.table_names() == ["Employees", "Departments"]
    assert [c.name for c in schema.tables[0].columns] == [
        "employee_id", "name", "department", "salary"]

    ddl = nlsql.render_ddl(schema)
    assert "CREATE TABLE Employees" in ddl and "CREATE TABLE Departments" in ddl
    pruned = nlsql.render_ddl(schema, keep={"Employees"})
    assert "Departments" not in pruned

    assert nlsql.resolve_identifier(schema, "employees") == ("Employees", None)
    assert nlsql.resolve_identifier(schema, "Employees.salary") == ("Employees", "salary")
    assert nlsql.resolve_identifier(schema, "flights") is None


def test_extraction(hr_db):
    schema = nlsql.load_schema(hr_db)
    assert nlsql.extract_tables("The relevant table is Employees.", schema) == ["Employees"]
    assert nlsql.extract_columns(
        "The related columns are Employees.name and Employees.salary.", schema
    ) == [("Employees", "name"), ("Employees", "salary")]
    assert nlsql.extract_sql("```sql\nSELECT 1\n```") == "SELECT 1"
    assert nlsql.extract_answer("The answer is 128") == "128"
    assert nlsql.extract_index("Index: 3", 16) == 3
    assert nlsql.extract_index("Index: 99", 16) is None


def test_prompts():
    prompts = nlsql.PromptSet()
    rendered = prompts.render(
        nlsql.StageKind.PRUNING,
        {
            "database_name": "hr",
            "database_schema": "CREATE TABLE Employees (...)",
            "question": "Salary of Alice?",
            "hint": "",
            "tables": "Employees, Departments",
        },
    )
    assert "Among the following tables: Employees, Departments" in rendered.user
    assert "## Hint\nNone" in rendered.user
    assert prompts.static_word_count(nlsql.StageKind.CORRECTION) <= 137


def test_execute_and_match(hr_db):
    ok = nlsql.execute(hr_db, "SELECT name, salary FROM Employees")
    assert ok.status == nlsql.ExecStatus.SUCCESS
    assert ok.rows == [("Alice", 4500.0), ("Bob", 3200.0)]

    reordered = nlsql.execute(
        hr_db, "SELECT name, salary FROM Employees ORDER BY salary")
    assert nlsql.results_match(ok, reordered)

    bad = nlsql.execute(hr_db, "DROP TABLE Employees")
    assert bad.status == nlsql.ExecStatus.ERROR
    assert "readonly" in bad.error_message


def test_scripted_pipeline(hr_db, tmp_path):
    gold = "SELECT salary FROM Employees WHERE name = 'Alice'"
    fenced = f"```sql\n{gold}\n```"

    chat = nlsql.ScriptedBackend()
    chat.add("pruning", ["The relevant table is Employees."])
    chat.add("linking", ["The related columns are Employees.name and Employees.salary."])
    chat.add("selection_with_results", ["Index: 1"])
    chat.add("selection_query_only", ["Index: 1"])
    sql = nlsql.ScriptedBackend()
    sql.add("*", [fenced])

    router = nlsql.BackendRouter()
    router.bind(nlsql.ModelRole.CHAT, chat)
    router.bind(nlsql.ModelRole.SQL, sql)

    config = nlsql.PipelineConfig()
    config.candidates_per_path = 2
    pipeline = nlsql.Pipeline(router, nlsql.PromptSet(), config)

    task = nlsql.QuestionTask("What is the salary of the employee named 'Alice'?",
                              "", "hr", "q1")
    schema = nlsql.load_schema(hr_db)
    result = pipeline.run(task, schema, hr_db)

    initial = [c for c in result.candidates if c.origin.is_initial]
    assert len(initial) == 8  # four paths, two candidates each
    assert result.selected_id is not None
    assert result.selected_sql() == gold
    assert result.pruned_tables == ["Employees"]

    executable, correct = nlsql.judge(result.selected_sql(), gold, hr_db)
    assert executable and correct
