"""Exception hierarchy shared by all toolbox components."""


class HscToolboxException(Exception):
    pass


class GeometryException(HscToolboxException):
    pass


class MeshParseError(HscToolboxException):

    def __init__(self, path, line_number, msg):
        self.path = path
        self.line_number = line_number
        if line_number is None:
            text = "{}: {}".format(path, msg)
        else:
            text = "{}:{}: {}".format(path, line_number, msg)
        super().__init__(text)


class DimensionMismatch(HscToolboxException, ValueError):

    def __init__(self, field, expected, got):
        self.field = field
        super().__init__(
            "dimension mismatch in '{}': expected {}, got {}"
            .format(field, expected, got))


class TopologyMismatch(HscToolboxException, ValueError):
    pass


class CameraException(HscToolboxException):
    pass


class FittingException(HscToolboxException):
    pass


class ConfigException(HscToolboxException, ValueError):

    def __init__(self, key, msg='unknown configuration key'):
        self.key = key
        super().__init__("{}: '{}'".format(msg, key))


class ManifestException(HscToolboxException):
    pass


class DatasetException(HscToolboxException):
    pass
