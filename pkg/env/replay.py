import json
from pathlib import Path

from .state import state_digest


class ReplayWriter:
    """
    JSONL replay log, one line per environment step
    """

    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self.path.open('w', encoding='utf-8')

    def record(self, state, home_actions, away_actions, result):
        line = {
            'step': result.next_state.step,
            'digest': state_digest(state),
            'home_actions': [int(a) for a in home_actions],
            'away_actions': [int(a) for a in away_actions],
            'events': [e.to_dict() for e in result.events],
            'reward': result.scoring_reward_home,
            'terminated': result.terminated,
        }
        if result.termination_cause is not None:
            line['cause'] = str(result.termination_cause.value)
        self._fh.write(json.dumps(line, sort_keys=True) + '\n')

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def read_replay(path):
    with Path(path).open(encoding='utf-8') as fh:
        return [json.loads(line) for line in fh if line.strip()]
