"""
REST API Server for the Diagonal Ideals Lab
JSON endpoints over the classification engine, exact norms and the report archive
"""
import os
import sys
from datetime import datetime
from pathlib import Path

from flask import Flask, jsonify, request
from flask_cors import CORS

sys.path.insert(0, str(Path(__file__).parent.parent))
from config.settings import API_CONFIG, GROWTH_CONFIG, VERSION
from backend.database import USE_POSTGRES, get_report, get_reports, get_stats, get_suite_runs, init_db
from backend.engine.errors import DomainError, LabError
from backend.engine.multilinear import DiagonalOperator
from backend.engine.norms import diagonal_norm_exact
from backend.engine.ideals import nuclear_integral_exact
from backend.engine.classify import classify_forms, classify_operators, coincidence_tables, growth_scan
from backend.cli import parse_alpha

app = Flask(__name__)
CORS(app)

IS_PRODUCTION = os.environ.get('RENDER', False) or os.environ.get('PRODUCTION', False)


def _required(name: str) -> str:
    value = request.args.get(name)
    if value is None or value == '':
        raise DomainError(f"Missing query parameter '{name}'")
    return value


@app.errorhandler(LabError)
def lab_error(e):
    return jsonify({'error': str(e), 'type': type(e).__name__}), 400


@app.errorhandler(404)
def not_found(e):
    return jsonify({'error': 'Not found'}), 404


@app.route('/api/health')
def health():
    """Health check endpoint"""
    return jsonify({
        'status': 'ok',
        'version': VERSION,
        'timestamp': datetime.now().isoformat(),
        'database': 'postgresql' if USE_POSTGRES else 'sqlite'
    })


@app.route('/api/classify')
def classify():
    """Classification of diagonal operators (or forms with forms=1)"""
    p = _required('p')
    n = request.args.get('n', type=int)
    if n is None:
        raise DomainError("Missing integer query parameter 'n'")
    if request.args.get('forms') in ('1', 'true'):
        return jsonify(classify_forms(p, n).to_json())
    return jsonify(classify_operators(p, _required('q'), n).to_json())


@app.route('/api/table')
def table():
    """Coincidence table rows for (p, q)"""
    return jsonify(coincidence_tables(_required('p'), _required('q')).to_json())


@app.route('/api/norm')
def norm():
    """Exact L, N or I norm of a diagonal operator"""
    ideal = request.args.get('ideal', 'L').upper()
    if ideal not in ('L', 'N', 'I'):
        raise DomainError(f"Exact norms are available for L, N and I, got '{ideal}'")
    n = request.args.get('n', type=int)
    if n is None:
        raise DomainError("Missing integer query parameter 'n'")
    nmax = request.args.get('nmax', type=int)
    if nmax is not None and nmax > API_CONFIG['max_alpha_length']:
        raise DomainError(f"nmax is capped at {API_CONFIG['max_alpha_length']}")
    alpha = parse_alpha(_required('alpha'), nmax)
    if alpha.shape[0] > API_CONFIG['max_alpha_length']:
        raise DomainError(f"alpha is capped at {API_CONFIG['max_alpha_length']} entries")

    op = DiagonalOperator(alpha, n, _required('p'), _required('q'))
    if ideal == 'L':
        cert = diagonal_norm_exact(op)
        return jsonify({'ideal': ideal, 'certificate': cert.to_json()})
    norms = nuclear_integral_exact(op)
    cert = norms.nuclear if ideal == 'N' else norms.integral
    return jsonify({'ideal': ideal, 't': str(norms.t), 'note': norms.note,
                    'certificate': cert.to_json()})


@app.route('/api/growth')
def growth():
    """Growth scan of finite-section norms of k^-s"""
    n = request.args.get('n', type=int)
    if n is None:
        raise DomainError("Missing integer query parameter 'n'")
    nmax = request.args.get('nmax', 1 << GROWTH_CONFIG['max_log2'], type=int)
    if nmax > API_CONFIG['max_alpha_length']:
        raise DomainError(f"nmax is capped at {API_CONFIG['max_alpha_length']}")
    grid = []
    size = 1 << GROWTH_CONFIG['min_log2']
    while size <= nmax:
        grid.append(size)
        size *= 2
    report = growth_scan(_required('p'), _required('q'), n, request.args.get('ideal', 'L'),
                         _required('s'), grid)
    return jsonify(report.to_json())


@app.route('/api/reports')
def reports():
    """Archived reports, newest first"""
    limit = request.args.get('limit', API_CONFIG['default_page_size'], type=int)
    offset = request.args.get('offset', 0, type=int)
    command = request.args.get('command')
    init_db()
    rows = get_reports(limit=limit, offset=offset, command=command)
    return jsonify({
        'reports': rows,
        'count': len(rows),
        'limit': limit,
        'offset': offset
    })


@app.route('/api/reports/<int:report_id>')
def report_detail(report_id):
    """Single archived report"""
    init_db()
    row = get_report(report_id)
    if row:
        return jsonify(row)
    return jsonify({'error': 'Report not found'}), 404


@app.route('/api/suite-runs')
def suite_runs():
    """Recent verification suite runs"""
    limit = request.args.get('limit', 20, type=int)
    init_db()
    return jsonify({'runs': get_suite_runs(limit=limit)})


@app.route('/api/stats')
def stats():
    """Archive statistics"""
    init_db()
    return jsonify(get_stats())


if __name__ == '__main__':
    port = API_CONFIG['port']
    debug = not IS_PRODUCTION
    print(f"Starting Diagonal Ideals Lab API Server on port {port}...")
    if not IS_PRODUCTION:
        print(f"Development mode - API at http://localhost:{port}")
    app.run(debug=debug, port=port, host='0.0.0.0')
