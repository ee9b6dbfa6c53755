"""Shared estimator base classes used across the experiments."""


class BaseEstimator:
    """Minimal fit/predict contract."""

    def fit(self, features, labels):
        raise NotImplementedError

    def predict(self, features):
        raise NotImplementedError


class IdentityScaler(BaseEstimator):
    def fit(self, features, labels=None):
        return self

    def predict(self, features):
        return features


class Pipeline(BaseEstimator):
    def __init__(self, steps):
        self.steps = list(steps)

    def fit(self, features, labels):
        for step in self.steps:
            step.fit(features, labels)
        return self

    def predict(self, features):
        for step in self.steps:
            features = step.predict(features)
        return features
