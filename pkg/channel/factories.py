import factory

from .layout import Luminaire, PhotoDetector, RoomLayout, grid_layout


class LuminaireFactory(factory.Factory):
    class Meta:
        model = Luminaire

    position = (2.0, 2.0, 3.0)
    semi_angle_half_power = 15.0
    leds_per_luminaire = 3600
    power_per_led = 0.01


class PhotoDetectorFactory(factory.Factory):
    class Meta:
        model = PhotoDetector

    position = (2.0, 2.0, 0.75)
    area = 1e-4
    fov = 15.0
    responsivity = 1.0
    refractive_index = 1.5
    filter_gain = 1.0


class RoomLayoutFactory(factory.Factory):
    """Single aligned luminaire/detector pair in the 4 x 4 x 3 m room"""

    class Meta:
        model = RoomLayout

    room_x = 4.0
    room_y = 4.0
    room_z = 3.0
    receiver_plane_z = 0.75
    luminaires = factory.LazyFunction(lambda: [LuminaireFactory()])
    detectors = factory.LazyFunction(lambda: [PhotoDetectorFactory()])
    label = factory.Sequence(lambda n: f'layout-{n}')


class GridLayoutFactory(factory.Factory):
    class Meta:
        model = RoomLayout

    @classmethod
    def _create(cls, model_class, count=4, spacing=1.0, **kwargs):
        return grid_layout(count, spacing, **kwargs)

    _build = _create
