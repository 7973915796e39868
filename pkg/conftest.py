import os

import hypothesis
import numpy as np

np.seterr(all="warn")

# test modules share function-scoped fixtures (env isolation) with property tests
_common = dict(deadline=None, suppress_health_check=[hypothesis.HealthCheck.function_scoped_fixture])

hypothesis.settings.register_profile("fast", max_examples=10, **_common)
hypothesis.settings.register_profile("ci", max_examples=50, **_common)
hypothesis.settings.register_profile("debugger", report_multiple_bugs=False, **_common)
hypothesis.settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "fast"))
