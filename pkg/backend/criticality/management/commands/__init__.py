from typing import Any, Mapping

# Exit statuses shared by the commands; 0 is success.
CONFIG_ERROR = 2
NUMERICAL_ERROR = 3
IO_ERROR = 4


def format_errors(errors: Mapping[str, Any]) -> str:
    """Flatten serializer errors into 'field: message' clauses."""
    parts = []
    for field, messages in errors.items():
        if isinstance(messages, (list, tuple)):
            messages = " ".join(str(m) for m in messages)
        parts.append(f"{field}: {messages}")
    return "; ".join(parts)
