from flask import Flask, request, jsonify
from flask_cors import CORS
import logging

from .config import load_settings
from .errors import INPUT_ERRORS, ScheduleError, WptNomaError
from .models.network import NetworkInstance
from .models.reports import example_report
from .models.schedulers import run_scheme
from .models.timeshare import region_boundary
from .batch_routes import batch_bp

app = Flask(__name__)
# Enable CORS for all routes and origins
CORS(app, resources={r"/*": {"origins": "*"}})
app.register_blueprint(batch_bp)

# Failures the HTTP layer reports instead of crashing
SOLVER_ERRORS = (WptNomaError, ArithmeticError)


def error_response(e, what):
    """400 for bad input, 500 when a solver fails."""
    if isinstance(e, INPUT_ERRORS):
        logging.warning(f"{what}: rejected input: {e}")
        return jsonify({"error": str(e)}), 400
    logging.exception(f"{what} failed: {e}")
    return jsonify({"error": f"{what} failed: {type(e).__name__}: {e}"}), 500


def request_json():
    data = request.get_json(silent=True)
    if not isinstance(data, dict):
        raise ScheduleError("request body must be a JSON object")
    return data


def number_field(data, name, kind, default=None):
    value = data.get(name, default)
    if value is None:
        return None
    try:
        return kind(value)
    except (TypeError, ValueError):
        raise ScheduleError(f"field {name!r} must be a number, got {value!r}")


@app.route('/api/health', methods=['GET'])
def health_check():
    return jsonify({"status": "ok"})


@app.route('/api/solve', methods=['POST'])
def solve():
    try:
        data = request_json()
        instance = NetworkInstance.from_dict(data.get('instance') or {})
        result = run_scheme(instance, data.get('scheme', 'd'), mode=data.get('mode'),
                            T=number_field(data, 'T', float))
        logging.debug(f"Solve result: scheme={result.scheme} objective={result.objective}")
        return jsonify(result.to_dict())
    except SOLVER_ERRORS as e:
        return error_response(e, "Solve")


@app.route('/api/examples/<int:example_id>', methods=['GET'])
def example(example_id):
    try:
        return jsonify(example_report(example_id))
    except SOLVER_ERRORS as e:
        return error_response(e, "Example report")


@app.route('/api/region', methods=['POST'])
def region():
    try:
        data = request_json()
        instance = NetworkInstance.from_dict(data.get('instance') or {})
        T = number_field(data, 'T', float)
        if T is None:
            raise ScheduleError("field 'T' is required")
        points = region_boundary(instance, T, number_field(data, 'samples', int, 2))
        return jsonify({"points": [list(p.rates) for p in points]})
    except SOLVER_ERRORS as e:
        return error_response(e, "Region export")


if __name__ == '__main__':
    settings = load_settings()
    logging.basicConfig(level=settings.log_level)
    app.run(debug=False, port=settings.port, host=settings.host)
