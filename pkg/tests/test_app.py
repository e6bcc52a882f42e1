import pytest

from backend.app import app
from backend.models.presets import example_instance


@pytest.fixture
def client():
    app.config['TESTING'] = True
    with app.test_client() as client:
        yield client


@pytest.fixture
def instance_doc():
    return example_instance(1).to_dict()


def test_health(client):
    response = client.get('/api/health')
    assert response.status_code == 200
    assert response.get_json() == {'status': 'ok'}


def test_solve(client, instance_doc):
    response = client.post('/api/solve', json={'instance': instance_doc, 'scheme': 'b', 'mode': 'greedy'})
    assert response.status_code == 200
    body = response.get_json()
    assert body['objective'] == pytest.approx(2.7891, abs=2e-3)
    assert 'schedule' in body


def test_solve_defaults_to_equal_rate_time_sharing(client, instance_doc):
    body = client.post('/api/solve', json={'instance': instance_doc}).get_json()
    assert body['scheme'] == 'd'


@pytest.mark.parametrize('payload', [
    {'instance': {}},
    {'scheme': 'e'},
    {'T': 'half'},
    {'scheme': 'c', 'T': 0.5},
])
def test_solve_rejects_bad_requests(client, instance_doc, payload):
    body = {'instance': instance_doc, **payload}
    response = client.post('/api/solve', json=body)
    assert response.status_code == 400
    assert 'error' in response.get_json()


def test_solve_rejects_non_json(client):
    response = client.post('/api/solve', data='not json', content_type='text/plain')
    assert response.status_code == 400


def test_examples(client):
    assert client.get('/api/examples/1').get_json()['T_star'] == pytest.approx(0.7958, abs=5e-4)
    assert client.get('/api/examples/9').status_code == 400


def test_region(client, instance_doc):
    response = client.post('/api/region', json={'instance': instance_doc, 'T': 0.7, 'samples': 4})
    assert response.status_code == 200
    assert len(response.get_json()['points']) == 4
    assert client.post('/api/region', json={'instance': instance_doc}).status_code == 400


def test_batch(client, instance_doc):
    broken = dict(instance_doc, eh_efficiency=2.0)
    response = client.post('/api/solve/batch', json={'instances': [instance_doc, broken], 'scheme': 'a'})
    assert response.status_code == 200
    body = response.get_json()
    assert body['count'] == 1
    assert body['failures'] == 1
    assert body['mean_objective'] == pytest.approx(0.918, abs=5e-3)
    assert body['results'][1]['index'] == 1


def test_batch_needs_instances(client):
    assert client.post('/api/solve/batch', json={}).status_code == 400
