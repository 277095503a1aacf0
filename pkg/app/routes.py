"""Flask routes for the timer selection service."""

import os
from flask import Blueprint, request, jsonify
from werkzeug.utils import secure_filename

from app.models import init_db
from app.tools.scheme_tables import (
    compute_scheme1,
    compute_scheme2,
    compute_table1,
    get_scheme_tables,
    save_scheme_table
)
from app.tools.experiment_runs import run_simulation, run_baseline, list_runs
from app.tools.results import results_dir


main_bp = Blueprint('main', __name__)

ALLOWED_EXTENSIONS = {'csv'}

STATUS_CODES = {
    "validation": 400,
    "infeasible": 409,
    "numerical": 500,
    "internal": 500
}


def allowed_file(filename):
    return '.' in filename and filename.rsplit('.', 1)[1].lower() in ALLOWED_EXTENSIONS


def respond(result):
    """JSON response with the status code implied by a tool result."""
    if result.get("success"):
        return jsonify(result)
    return jsonify(result), STATUS_CODES.get(result.get("error_type"), 500)


def _payload():
    if request.is_json:
        return request.get_json() or {}
    return request.form.to_dict()


def _float(data, key):
    value = data.get(key)
    return float(value) if value not in (None, "") else None


def _int(data, key):
    value = data.get(key)
    return int(value) if value not in (None, "") else None


def _flag(data, key):
    value = data.get(key, False)
    if isinstance(value, str):
        return value.lower() in ("1", "true", "yes")
    return bool(value)


@main_bp.before_app_request
def setup():
    """Initialize database on first request."""
    init_db()


@main_bp.errorhandler(ValueError)
def bad_number(e):
    return jsonify({"success": False, "error": str(e), "error_type": "validation"}), 400


# ============== Scheme API ==============

@main_bp.route('/api/scheme1', methods=['GET'])
def api_scheme1():
    """Maximum-success mapping; query k, n or delta+tmax, optional dist."""
    args = request.args
    result = compute_scheme1(
        k=args.get('k', 'inf'),
        n=args.get('n'),
        delta=_float(args, 'delta'),
        tmax=_float(args, 'tmax'),
        dist=args.get('dist')
    )
    return respond(result)


@main_bp.route('/api/scheme2', methods=['GET'])
def api_scheme2():
    """Minimum-time mapping under a success constraint."""
    args = request.args
    result = compute_scheme2(
        k=args.get('k', 'inf'),
        n=args.get('n'),
        eta=args.get('eta', '0.9'),
        delta=_float(args, 'delta'),
        tmax=_float(args, 'tmax')
    )
    return respond(result)


@main_bp.route('/api/table1', methods=['GET'])
def api_table1():
    result = compute_table1(eta=request.args.get('eta'), feedback=_flag(request.args, 'feedback'))
    return respond(result)


@main_bp.route('/api/tables', methods=['GET'])
def api_get_tables():
    """Stored lookup tables."""
    result = get_scheme_tables(scheme=request.args.get('scheme'))
    return respond(result)


@main_bp.route('/api/tables', methods=['POST'])
def api_save_table():
    """Compute one lookup table and store it."""
    data = _payload()
    k = data.get('k', 'inf')
    result = save_scheme_table(
        scheme=data.get('scheme', 'scheme1'),
        k=None if str(k).lower() == 'inf' else int(k),
        n_slots=int(data.get('n', 0)),
        delta=_float(data, 'delta') or 1.0,
        eta=_float(data, 'eta')
    )
    return respond(result)


# ============== Experiments API ==============

@main_bp.route('/api/simulate', methods=['POST'])
def api_simulate():
    """Simulate a mapping; a lookup table may be uploaded as file field 'mapping'."""
    data = _payload()
    mapping_path = None

    if 'mapping' in request.files:
        file = request.files['mapping']
        if file.filename == '' or not allowed_file(file.filename):
            return jsonify({"success": False, "error": "Mapping upload must be a .csv file",
                            "error_type": "validation"}), 400
        upload_folder = os.path.join(results_dir(), 'uploads')
        os.makedirs(upload_folder, exist_ok=True)
        mapping_path = os.path.join(upload_folder, secure_filename(file.filename))
        file.save(mapping_path)

    result = run_simulation(
        k=str(data.get('k', '')),
        n=data.get('n') if data.get('n') is None else str(data.get('n')),
        delta=_float(data, 'delta'),
        tmax=_float(data, 'tmax'),
        mapping=data.get('scheme', 'scheme1'),
        mapping_path=mapping_path,
        eta=_float(data, 'eta'),
        c=_float(data, 'c'),
        dist=data.get('dist', 'uniform'),
        discretize=_flag(data, 'discretize'),
        trials=_int(data, 'trials'),
        seed=_int(data, 'seed') or 0,
        time_convention=data.get('time_convention', 'nslots'),
        record=_flag(data, 'record') if 'record' in data else True
    )
    return respond(result)


@main_bp.route('/api/baseline', methods=['POST'])
def api_baseline():
    """Tune the inverse-metric rule and compare it with the optimal scheme."""
    data = _payload()
    result = run_baseline(
        k=str(data.get('k', '')),
        n=data.get('n') if data.get('n') is None else str(data.get('n')),
        delta=_float(data, 'delta'),
        tmax=_float(data, 'tmax'),
        dist=data.get('dist', 'uniform'),
        objective=data.get('objective', 'success'),
        eta=_float(data, 'eta'),
        budget=_int(data, 'budget'),
        trials=_int(data, 'trials'),
        final_trials=_int(data, 'final_trials'),
        seed=_int(data, 'seed') or 0,
        time_convention=data.get('time_convention', 'nslots'),
        record=_flag(data, 'record') if 'record' in data else True
    )
    return respond(result)


@main_bp.route('/api/runs', methods=['GET'])
def api_runs():
    """Stored simulation and baseline runs."""
    limit = int(request.args.get('limit', 50))
    result = list_runs(kind=request.args.get('kind'), limit=limit)
    return respond(result)
