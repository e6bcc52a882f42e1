from flask import Blueprint, request, jsonify
import logging

import numpy as np

from .errors import INPUT_ERRORS, WptNomaError
from .models.network import NetworkInstance, jain_index
from .models.schedulers import run_scheme

batch_bp = Blueprint('batch', __name__)


@batch_bp.route('/api/solve/batch', methods=['POST'])
def solve_batch():
    data = request.get_json(silent=True) or {}
    instances = data.get('instances', [])
    if not instances or not isinstance(instances, list):
        return jsonify({'error': 'No instances provided'}), 400
    scheme = data.get('scheme', 'd')
    mode = data.get('mode')

    results = []
    for i, doc in enumerate(instances):
        try:
            result = run_scheme(NetworkInstance.from_dict(doc), scheme, mode=mode)
            entry = result.to_dict()
            entry['jain'] = jain_index(result.allocation.rates)
            results.append(entry)
        except (WptNomaError, ArithmeticError) as e:
            kind = 'input' if isinstance(e, INPUT_ERRORS) else 'solver'
            logging.warning(f"Batch instance {i} failed ({kind}): {e}")
            results.append({'index': i, 'error': f"{type(e).__name__}: {e}"})

    # Aggregate over the successful solves only
    solved = [r for r in results if 'error' not in r]
    means = {
        key: (float(np.mean([r[field] for r in solved])) if solved else None)
        for key, field in (('mean_objective', 'objective'), ('mean_T', 'T'), ('mean_jain', 'jain'))
    }
    return jsonify({
        'results': results,
        **means,
        'count': len(solved),
        'failures': len(results) - len(solved),
    })
