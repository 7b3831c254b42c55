"""
Hiérarchie d'exceptions du laboratoire.

Le code de bibliothèque lève ces exceptions ; seul cli.py les attrape pour
afficher un message et choisir le code de sortie.
"""


class LabError(Exception):
    """Racine de toutes les erreurs du laboratoire."""

    exit_code = 1


class ConfigError(LabError):
    exit_code = 2


class InvalidIndexError(LabError):
    exit_code = 2


class SingularMatrixError(LabError):
    pass


class DomainError(LabError):
    """Valeur hors de l'intervalle de définition ou paramètre hors plage."""


class PoleError(LabError):
    """Évaluation en un pôle d'une application de Möbius."""

    def __init__(self, message, value=None):
        super().__init__(message)
        self.value = value


class InvalidWordError(LabError):
    """Mot mal formé ; `position` est l'indice (à partir de 1) de la lettre fautive."""

    exit_code = 2

    def __init__(self, message, position=None):
        if position is not None:
            message = f"{message} (position {position})"
        super().__init__(message)
        self.position = position


class UnsupportedCaseError(LabError):
    pass


class InvalidCandidateError(LabError):
    pass


class ConstructionError(LabError):
    pass


class InfiniteMassError(LabError):
    pass


class PreconditionError(LabError):
    pass


class UnresolvedParameterError(LabError):
    exit_code = 2
