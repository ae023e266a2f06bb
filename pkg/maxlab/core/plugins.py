from pydantic import BaseModel, Field


class Result(BaseModel):
    """The outcome of one lab task.

    Attributes:
        relates_to (str): The domain the result was computed on.
        result_name (str): The name of the task that produced the result.
        result_description (str): The description of the result.
        details (dict): Report fragment merged into the JSON report.
        formatted (str): Human readable summary.
        failed_checks (list[str]): Names of inequality checks that failed.
    """

    relates_to: str
    result_name: str
    result_description: str
    details: dict
    formatted: str
    failed_checks: list[str] = Field(default_factory=list)
